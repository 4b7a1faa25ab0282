#include "r2vpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "r2vpo/errors.hpp"

namespace r2vpo {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_batch(const GaussianPolicy& policy, const Eigen::MatrixXd& states,
                 const Eigen::MatrixXd& actions) {
  if (states.rows() != policy.obs_dim() || actions.rows() != policy.act_dim() ||
      states.cols() != actions.cols()) {
    throw std::invalid_argument("policy batch shape mismatch: states " + std::to_string(states.rows()) +
                                "x" + std::to_string(states.cols()) + ", actions " +
                                std::to_string(actions.rows()) + "x" + std::to_string(actions.cols()));
  }
  if (!actions.allFinite()) throw NumericError("non-finite action in policy batch");
}

// Standardized residual (a - mu) / sigma per action dim and column.
Eigen::MatrixXd residuals(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& actions,
                          const Eigen::VectorXd& log_std) {
  const Eigen::ArrayXd inv_sigma = (-log_std.array()).exp();
  return ((actions - mu).array().colwise() * inv_sigma).matrix();
}

Eigen::VectorXd log_prob_from_residuals(const Eigen::MatrixXd& z, const Eigen::VectorXd& log_std) {
  const double constant = -log_std.sum() - kHalfLog2Pi * static_cast<double>(log_std.size());
  return (-0.5 * z.array().square().colwise().sum()).matrix().transpose().array() + constant;
}

// Accumulates the gradient of sum_i d_logp[i] * logp[i] for the columns of one
// shard into `grad` (mean-net part, then log_std part).
void accumulate_shard(const GaussianPolicy& policy, const Mlp::Tape& tape, const Eigen::MatrixXd& z,
                      const Eigen::VectorXd& d_logp, Eigen::Ref<Eigen::VectorXd> grad) {
  const Eigen::ArrayXd inv_sigma = (-policy.log_std().array()).exp();
  // d logp / d mu = (a - mu) / sigma^2 = z / sigma
  Eigen::MatrixXd d_mu = (z.array().colwise() * inv_sigma).matrix();
  d_mu = d_mu * d_logp.asDiagonal();
  const auto n_net = static_cast<Eigen::Index>(policy.mean_net().parameter_count());
  policy.mean_net().backward(tape, d_mu, grad.head(n_net));
  // d logp / d log_sigma = z^2 - 1
  grad.tail(policy.act_dim()) += ((z.array().square() - 1.0).matrix() * d_logp);
}

}  // namespace

GaussianPolicy::GaussianPolicy(Mlp mean_net, Eigen::VectorXd log_std)
    : mean_net_(std::move(mean_net)), log_std_(std::move(log_std)) {
  if (log_std_.size() != mean_net_.output_dim()) {
    throw std::invalid_argument("log_std length must equal the action dimension");
  }
  if (!log_std_.allFinite()) throw NumericError("non-finite log_std");
}

GaussianPolicy GaussianPolicy::initialized(int obs_dim, const std::vector<int>& hidden, int act_dim,
                                           Rng& rng, double init_log_std) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  return GaussianPolicy(Mlp::scaled_uniform(sizes, rng), Eigen::VectorXd::Constant(act_dim, init_log_std));
}

std::size_t GaussianPolicy::parameter_count() const {
  return mean_net_.parameter_count() + static_cast<std::size_t>(log_std_.size());
}

Eigen::VectorXd GaussianPolicy::flat() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  out << mean_net_.params(), log_std_;
  return out;
}

void GaussianPolicy::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw std::invalid_argument("policy parameter vector length mismatch");
  }
  const auto n_net = static_cast<Eigen::Index>(mean_net_.parameter_count());
  mean_net_.assign(flat.head(n_net));
  log_std_ = flat.tail(act_dim());
}

void GaussianPolicy::clamp_log_std() { log_std_ = log_std_.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }

Eigen::MatrixXd GaussianPolicy::mean(const Eigen::MatrixXd& states) const { return mean_net_.forward(states); }

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
  check_batch(*this, states, actions);
  return log_prob_from_residuals(residuals(mean(states), actions, log_std_), log_std_);
}

double GaussianPolicy::entropy() const {
  return log_std_.sum() + (0.5 + kHalfLog2Pi) * static_cast<double>(log_std_.size());
}

ActionSample GaussianPolicy::sample_action(const Eigen::VectorXd& state, Rng& rng) const {
  const Eigen::VectorXd mu = mean_net_.forward(state);
  ActionSample out;
  out.action.resize(act_dim());
  for (int d = 0; d < act_dim(); ++d) out.action[d] = mu[d] + std::exp(log_std_[d]) * standard_normal(rng);
  out.log_prob = log_prob(state, out.action)[0];
  return out;
}

LossGradient backward(const GaussianPolicy& policy, const LogProbLoss& loss, const Eigen::MatrixXd& states,
                      const Eigen::MatrixXd& actions) {
  check_batch(policy, states, actions);
  Mlp::Tape tape;
  const Eigen::MatrixXd mu = policy.mean_net().forward(states, tape);
  const Eigen::MatrixXd z = residuals(mu, actions, policy.log_std());
  const Eigen::VectorXd logp = log_prob_from_residuals(z, policy.log_std());
  Eigen::VectorXd d_logp = Eigen::VectorXd::Zero(logp.size());
  LossGradient result;
  result.loss = loss(logp, &d_logp);
  result.gradient = GradientVector::Zero(static_cast<Eigen::Index>(policy.parameter_count()));
  accumulate_shard(policy, tape, z, d_logp, result.gradient);
  return result;
}

LossGradient backward_sharded(const GaussianPolicy& policy, const LogProbLoss& loss,
                              const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions, int shards) {
  check_batch(policy, states, actions);
  const Eigen::Index n = states.cols();
  shards = std::max(1, std::min<int>(shards, static_cast<int>(std::max<Eigen::Index>(n, 1))));
  std::vector<Eigen::Index> begin(static_cast<std::size_t>(shards) + 1);
  for (int s = 0; s <= shards; ++s) begin[static_cast<std::size_t>(s)] = n * s / shards;

  std::vector<Mlp::Tape> tapes(static_cast<std::size_t>(shards));
  std::vector<Eigen::MatrixXd> zs(static_cast<std::size_t>(shards));
  Eigen::VectorXd logp(n);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < shards; ++s) {
    const auto us = static_cast<std::size_t>(s);
    const Eigen::Index b = begin[us], len = begin[us + 1] - begin[us];
    const Eigen::MatrixXd mu = policy.mean_net().forward(states.middleCols(b, len), tapes[us]);
    zs[us] = residuals(mu, actions.middleCols(b, len), policy.log_std());
    logp.segment(b, len) = log_prob_from_residuals(zs[us], policy.log_std());
  }

  Eigen::VectorXd d_logp = Eigen::VectorXd::Zero(n);
  LossGradient result;
  result.loss = loss(logp, &d_logp);

  const auto p = static_cast<Eigen::Index>(policy.parameter_count());
  std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(shards), Eigen::VectorXd::Zero(p));
  // Propagate exceptions out of the parallel region manually.
  std::vector<std::string> errors(static_cast<std::size_t>(shards));
#pragma omp parallel for schedule(static)
  for (int s = 0; s < shards; ++s) {
    const auto us = static_cast<std::size_t>(s);
    const Eigen::Index b = begin[us], len = begin[us + 1] - begin[us];
    try {
      accumulate_shard(policy, tapes[us], zs[us], d_logp.segment(b, len), partial[us]);
    } catch (const std::exception& e) {
      errors[us] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericError(e);
  }
  result.gradient = GradientVector::Zero(p);
  for (const auto& g : partial) result.gradient += g;
  return result;
}

GradientVector finite_diff_gradient(const GaussianPolicy& policy, const LogProbLoss& loss,
                                    const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  GaussianPolicy probe = policy;
  Eigen::VectorXd theta = policy.flat();
  GradientVector grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    probe.assign(theta);
    const double up = loss(probe.log_prob(states, actions), nullptr);
    theta[i] = saved - h;
    probe.assign(theta);
    const double down = loss(probe.log_prob(states, actions), nullptr);
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace r2vpo
