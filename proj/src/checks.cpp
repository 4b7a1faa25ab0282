#include "r2vpo/checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "r2vpo/dual.hpp"
#include "r2vpo/objective.hpp"
#include "r2vpo/policy.hpp"
#include "r2vpo/rng.hpp"

namespace r2vpo::checks {

using divergence::DivergenceGenerator;
using divergence::Kind;

AgreementCheck check_agreement(DivergenceGenerator gen, std::span<const divergence::SweepRow> rows,
                               double variance_limit, double tolerance) {
  AgreementCheck out;
  const bool chi = gen.kind == Kind::kChiSquared;
  for (const auto& row : rows) {
    if (!chi && row.ratio_variance > variance_limit) continue;
    ++out.rows_checked;
    if (row.relative_error > out.worst_relative_error) {
      out.worst_relative_error = row.relative_error;
      out.worst_ratio_variance = row.ratio_variance;
    }
    if (row.relative_error > (chi ? kChiSquaredTolerance : tolerance)) out.passed = false;
  }
  return out;
}

std::vector<double> gaussian_sweep_scales() {
  return {0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5};
}

std::vector<double> discrete_sweep_variances() { return {1e-5, 1e-4, 1e-3, 3e-3, 1e-2}; }

std::vector<DiscreteFamilyReport> discrete_family_check(std::uint64_t seed, std::size_t pairs, std::size_t support) {
  std::vector<DiscreteFamilyReport> reports;
  for (Kind k : divergence::kAllKinds) reports.push_back({k, pairs, 0, 0.0, 0.0});
  Rng rng = make_rng(seed, Stream::kTest, 0);
  const std::vector<double> variances = discrete_sweep_variances();
  for (std::size_t pair = 0; pair < pairs; ++pair) {
    const auto family = divergence::random_discrete_perturbation(rng, support);
    std::vector<double> scales;
    for (double v : variances) scales.push_back(divergence::scale_for_ratio_variance(family, v));
    for (auto& report : reports) {
      const DivergenceGenerator gen{report.kind};
      const auto rows = divergence::approximation_error_sweep(gen, family, scales);
      const AgreementCheck c = check_agreement(gen, rows);
      if (!c.passed) ++report.failing_pairs;
      if (c.worst_relative_error > report.worst_relative_error) {
        report.worst_relative_error = c.worst_relative_error;
        report.worst_ratio_variance = c.worst_ratio_variance;
      }
    }
  }
  return reports;
}

GradcheckReport gradcheck_suite(std::uint64_t seed, int nets, double h) {
  GradcheckReport report;
  report.nets = nets;
  for (int k = 0; k < nets; ++k) {
    Rng rng = make_rng(seed, Stream::kTest, static_cast<std::uint64_t>(k));
    std::uniform_int_distribution<int> obs_d(1, 8), act_d(1, 3), depth_d(1, 2), width_d(2, 16), batch_d(3, 12);
    const int obs = obs_d(rng), act = act_d(rng), n = batch_d(rng);
    std::vector<int> hidden(static_cast<std::size_t>(depth_d(rng)));
    for (auto& w : hidden) w = width_d(rng);
    GaussianPolicy policy = GaussianPolicy::initialized(obs, hidden, act, rng, 0.0);
    Eigen::VectorXd theta = policy.flat();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * standard_normal(rng);
    for (int d = 0; d < act; ++d) theta[theta.size() - act + d] = uniform(rng, -1.0, 0.5);
    policy.assign(theta);

    Eigen::MatrixXd states(obs, n), actions(act, n);
    for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = standard_normal(rng);
    const Eigen::MatrixXd mu = policy.mean(states);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (int d = 0; d < act; ++d) actions(d, j) = mu(d, j) + std::exp(policy.log_std()[d]) * standard_normal(rng);
    }
    const Eigen::VectorXd logp = policy.log_prob(states, actions);
    std::vector<double> logp_off(static_cast<std::size_t>(n)), adv(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      logp_off[static_cast<std::size_t>(j)] = logp[j] + 0.3 * standard_normal(rng);
      adv[static_cast<std::size_t>(j)] = standard_normal(rng);
    }
    const DualState dual = initial_state(DualMode::kFixed, uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 0.1), 5e-3);

    const LogProbLoss objective = [&](const Eigen::VectorXd& lp, Eigen::VectorXd* d_lp) {
      const RatioBatch rb =
          compute_ratios(std::span<const double>(lp.data(), static_cast<std::size_t>(lp.size())), logp_off);
      std::vector<double> d_ratio(d_lp ? rb.size() : 0);
      const double value = r2vpo_loss(rb, adv, dual, d_ratio);
      if (d_lp) {
        const auto g = ratio_to_log_prob_gradient(rb, d_ratio);
        for (std::size_t i = 0; i < g.size(); ++i) (*d_lp)[static_cast<Eigen::Index>(i)] = g[i];
      }
      return value;
    };
    const LossGradient analytic = backward(policy, objective, states, actions);
    const GradientVector numeric = finite_diff_gradient(policy, objective, states, actions, h);
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      const double a = analytic.gradient[i], f = numeric[i], diff = std::abs(a - f);
      if (std::abs(a) < kGradcheckAbsoluteFloor) {
        report.max_absolute_error = std::max(report.max_absolute_error, diff);
        continue;
      }
      const double err = diff / std::max(std::abs(a), std::abs(f));
      if (report.worst_net < 0 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_net = k;
      }
    }
  }
  return report;
}

BoundReport clip_bound_trials(std::uint64_t seed, int trials) {
  BoundReport report;
  report.trials = trials;
  Rng rng = make_rng(seed, Stream::kTest, 0);
  constexpr std::array<double, 3> kEps = {0.1, 0.2, 0.3};
  std::uniform_int_distribution<int> size_d(16, 256);
  std::uniform_int_distribution<std::size_t> eps_d(0, kEps.size() - 1);
  for (int t = 0; t < trials; ++t) {
    const int n = size_d(rng);
    const double sigma = uniform(rng, 0.01, 0.5);
    const double eps = kEps[eps_d(rng)];
    std::vector<double> logp_new(static_cast<std::size_t>(n)), logp_old(static_cast<std::size_t>(n), 0.0),
        adv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      logp_new[static_cast<std::size_t>(i)] = sigma * standard_normal(rng);
      adv[static_cast<std::size_t>(i)] = uniform(rng, -2.0, 2.0);
    }
    const RatioBatch rb = compute_ratios(logp_new, logp_old);
    const ClipErrorReport r = check_clip_bound(rb, adv, eps);
    if (r.bound_value > 0.0) report.max_gap_over_bound = std::max(report.max_gap_over_bound, r.abs_gap / r.bound_value);
    if (!r.holds) {
      if (report.violations == 0) report.first_violation = to_csv_row(r);
      ++report.violations;
    }
  }
  return report;
}

}  // namespace r2vpo::checks
