#include "r2vpo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "r2vpo/errors.hpp"
#include "r2vpo/format.hpp"
#include "r2vpo/objective.hpp"

namespace r2vpo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRatioBandLow = 0.5;
constexpr double kRatioBandHigh = 2.0;

bool is_r2vpo(Algo algo) { return algo == Algo::kR2vpoOn || algo == Algo::kR2vpoOff; }

Eigen::MatrixXd observe_all(std::span<const envs::EnvState> states, const envs::EnvConfig& env) {
  Eigen::MatrixXd raw(env.obs_dim(), static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    envs::observe(states[i], env, std::span<double>(raw.col(col).data(), static_cast<std::size_t>(raw.rows())));
    if (!raw.col(col).allFinite()) throw NumericError("non-finite observation from env " + std::to_string(i));
  }
  return raw;
}

double mean_of(std::span<const int> v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::accumulate(v.begin(), v.end(), 0L)) / static_cast<double>(v.size());
}

}  // namespace

std::string to_csv_row(const IterationMetrics& m) {
  std::ostringstream out;
  out << m.iteration << ',' << m.env_steps << ',' << format_double(m.mean_eval_return) << ','
      << format_double(m.policy_loss) << ',' << format_double(m.value_loss) << ','
      << format_double(m.ratio_second_moment) << ',' << format_double(m.lambda) << ','
      << format_double(m.grad_norm) << ',' << m.clamp_events << ',' << format_double(m.frac_ratio_outside);
  return out.str();
}

MinibatchStats merge(std::span<const MinibatchStats> parts) {
  MinibatchStats out;
  for (const auto& p : parts) out.size += p.size;
  if (out.size == 0) return out;
  for (const auto& p : parts) {
    const double w = static_cast<double>(p.size) / static_cast<double>(out.size);
    out.objective += w * p.objective;
    out.value_loss += w * p.value_loss;
    out.ratio_second_moment += w * p.ratio_second_moment;
    out.grad_norm += w * p.grad_norm;
    out.frac_ratio_outside += w * p.frac_ratio_outside;
    out.mean_staleness += w * p.mean_staleness;
    out.clamp_events += p.clamp_events;
  }
  return out;
}

double evaluate_policy(const GaussianPolicy& policy, const RunningStats& stats, const envs::EnvConfig& env,
                       int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw std::invalid_argument("episodes must be positive");
  std::vector<envs::EnvState> states;
  for (int k = 0; k < episodes; ++k) {
    states.push_back(envs::reset(env, split_seed(seed, Stream::kEval, static_cast<std::uint64_t>(k))).state);
  }
  std::vector<double> returns(states.size(), 0.0);
  std::vector<std::uint8_t> finished(states.size(), 0);
  while (std::find(finished.begin(), finished.end(), 0) != finished.end()) {
    Eigen::MatrixXd obs = observe_all(states, env);
    if (stats.count() > 0.0) obs = stats.normalize(obs);
    const envs::VectorStep vs = envs::step_vectorized(states, policy.mean(obs), env);
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (finished[i]) continue;
      returns[i] += vs.rewards[i];
      states[i] = vs.next[i];
      finished[i] = vs.dones[i];
    }
  }
  return std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
}

Trainer::Trainer(TrainerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  env_cfg_ = envs::EnvConfig::defaults(cfg_.env);
  const int obs = env_cfg_.obs_dim();
  const int act = env_cfg_.act_dim();

  Rng policy_init = make_rng(cfg_.seed, Stream::kInit, 0);
  policy_ = GaussianPolicy::initialized(obs, cfg_.policy_hidden, act, policy_init, cfg_.init_log_std);
  Rng value_init = make_rng(cfg_.seed, Stream::kInit, 1);
  std::vector<int> value_sizes{obs};
  value_sizes.insert(value_sizes.end(), cfg_.value_hidden.begin(), cfg_.value_hidden.end());
  value_sizes.push_back(1);
  value_net_ = Mlp::scaled_uniform(value_sizes, value_init);
  value_scale_ = cfg_.adv.reward_scale / (1.0 - cfg_.adv.gamma);

  obs_stats_ = RunningStats(obs);
  AdamConfig adam;
  adam.learning_rate = cfg_.learning_rate;
  policy_adam_ = Adam(static_cast<Eigen::Index>(policy_.parameter_count()), adam);
  value_adam_ = Adam(static_cast<Eigen::Index>(value_net_.parameter_count()), adam);
  dual_ = initial_state(cfg_.dual_mode, cfg_.lambda0, cfg_.delta, cfg_.eta_lambda);
  if (cfg_.uses_replay()) replay_.emplace(cfg_.replay);

  action_rng_ = make_rng(cfg_.seed, Stream::kAction);
  shuffle_rng_ = make_rng(cfg_.seed, Stream::kShuffle);
  replay_rng_ = make_rng(cfg_.seed, Stream::kReplay);

  env_states_.resize(static_cast<std::size_t>(cfg_.parallel_envs));
  episodes_started_.assign(env_states_.size(), 0);
  // First episodes are shortened by evenly spaced offsets so that the slots
  // stay out of phase and every rollout mixes all stages of an episode.
  for (std::size_t i = 0; i < env_states_.size(); ++i) {
    reset_slot(i);
    env_states_[i].step = static_cast<int>(i * static_cast<std::size_t>(env_cfg_.episode_length) / env_states_.size());
  }
}

void Trainer::reset_slot(std::size_t slot) {
  const std::uint64_t index = (static_cast<std::uint64_t>(slot) << 32) | episodes_started_[slot]++;
  env_states_[slot] = envs::reset(env_cfg_, split_seed(cfg_.seed, Stream::kEnvReset, index)).state;
}

Eigen::MatrixXd Trainer::normalize(const Eigen::MatrixXd& raw, bool update) {
  if (!cfg_.observation_normalization) return raw;
  if (update) obs_stats_.update(raw);
  return obs_stats_.normalize(raw);
}

TransitionBatch Trainer::collect_rollouts() {
  const auto n_env = static_cast<Eigen::Index>(env_states_.size());
  const Eigen::Index horizon = cfg_.rollout_length;
  const Eigen::Index n = n_env * horizon;
  const int act = env_cfg_.act_dim();

  TransitionBatch batch;
  batch.states.resize(env_cfg_.obs_dim(), n);
  batch.actions.resize(act, n);
  batch.rewards.resize(static_cast<std::size_t>(n));
  batch.dones.resize(static_cast<std::size_t>(n));
  batch.values.resize(static_cast<std::size_t>(n));
  batch.log_prob_off.resize(static_cast<std::size_t>(n));
  // Scaled reward plus gamma * V(final observation) on time-limit steps.
  std::vector<double> gae_rewards(static_cast<std::size_t>(n));

  const Eigen::ArrayXd sigma = policy_.log_std().array().exp();
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const Eigen::MatrixXd obs = normalize(observe_all(env_states_, env_cfg_), true);
    Eigen::MatrixXd actions = policy_.mean(obs);
    for (Eigen::Index i = 0; i < n_env; ++i) {
      for (int d = 0; d < act; ++d) actions(d, i) += sigma[d] * standard_normal(action_rng_);
    }
    const Eigen::VectorXd logp = policy_.log_prob(obs, actions);
    const Eigen::VectorXd values = value_scale_ * forward_value(value_net_, obs);
    const envs::VectorStep vs = envs::step_vectorized(env_states_, actions, env_cfg_);

    const Eigen::Index base = t * n_env;
    batch.states.middleCols(base, n_env) = obs;
    batch.actions.middleCols(base, n_env) = actions;
    for (Eigen::Index i = 0; i < n_env; ++i) {
      const auto k = static_cast<std::size_t>(base + i);
      batch.rewards[k] = vs.rewards[static_cast<std::size_t>(i)] * cfg_.adv.reward_scale;
      batch.dones[k] = vs.dones[static_cast<std::size_t>(i)];
      batch.values[k] = values[i];
      batch.log_prob_off[k] = logp[i];
      gae_rewards[k] = batch.rewards[k];
    }
    env_states_ = vs.next;

    for (Eigen::Index i = 0; i < n_env; ++i) {
      const auto slot = static_cast<std::size_t>(i);
      if (!vs.dones[slot]) continue;
      if (!vs.observations.col(i).allFinite()) throw NumericError("non-finite observation from env " + std::to_string(i));
      const Eigen::MatrixXd final_obs = cfg_.observation_normalization
                                            ? obs_stats_.normalize(vs.observations.col(i))
                                            : Eigen::MatrixXd(vs.observations.col(i));
      gae_rewards[static_cast<std::size_t>(base + i)] +=
          cfg_.adv.gamma * value_scale_ * forward_value(value_net_, final_obs)[0];
      reset_slot(slot);
    }
  }
  env_steps_ += static_cast<long>(n);

  Eigen::MatrixXd last_obs = observe_all(env_states_, env_cfg_);
  if (cfg_.observation_normalization) last_obs = obs_stats_.normalize(last_obs);
  const Eigen::VectorXd bootstrap = value_scale_ * forward_value(value_net_, last_obs);

  batch.advantages.resize(static_cast<std::size_t>(n));
  batch.returns.resize(static_cast<std::size_t>(n));
  std::vector<double> r(static_cast<std::size_t>(horizon)), v(r.size());
  std::vector<std::uint8_t> d(r.size());
  for (Eigen::Index i = 0; i < n_env; ++i) {
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const auto k = static_cast<std::size_t>(t * n_env + i);
      r[static_cast<std::size_t>(t)] = gae_rewards[k];
      v[static_cast<std::size_t>(t)] = batch.values[k];
      d[static_cast<std::size_t>(t)] = batch.dones[k];
    }
    const GaeResult g = gae(r, v, bootstrap[i], d, cfg_.adv);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const auto k = static_cast<std::size_t>(t * n_env + i);
      batch.advantages[k] = g.advantages[static_cast<std::size_t>(t)];
      batch.returns[k] = g.returns[static_cast<std::size_t>(t)];
    }
  }
  if (cfg_.adv.normalize_advantages) normalize_advantages(batch.advantages);
  batch.validate();
  return batch;
}

PolicyObjective Trainer::policy_objective(const TransitionBatch& mb) const {
  PolicyObjective out;
  const LogProbLoss objective = [&](const Eigen::VectorXd& logp, Eigen::VectorXd* d_logp) {
    const RatioBatch rb = compute_ratios(std::span<const double>(logp.data(), static_cast<std::size_t>(logp.size())),
                                         mb.log_prob_off);
    std::vector<double> d_ratio(d_logp ? rb.size() : 0);
    const double value = is_r2vpo(cfg_.algo) ? r2vpo_loss(rb, mb.advantages, dual_, d_ratio)
                                             : clip_loss(rb, mb.advantages, cfg_.clip_config(), d_ratio);
    if (d_logp) {
      const std::vector<double> g = ratio_to_log_prob_gradient(rb, d_ratio);
      for (std::size_t i = 0; i < g.size(); ++i) (*d_logp)[static_cast<Eigen::Index>(i)] = g[i];
      out.ratio = rb.ratio;
      out.ratio_second_moment = ratio_second_moment(rb);
      out.clamp_events = rb.clamp_events;
    }
    return value;
  };
  LossGradient lg = cfg_.gradient_shards > 1
                        ? backward_sharded(policy_, objective, mb.states, mb.actions, cfg_.gradient_shards)
                        : backward(policy_, objective, mb.states, mb.actions);
  out.objective = lg.loss;
  out.gradient = std::move(lg.gradient);
  return out;
}

MinibatchStats Trainer::optimize_minibatch(const TransitionBatch& mb) {
  const auto n = static_cast<Eigen::Index>(mb.size());
  if (n == 0) throw std::invalid_argument("empty minibatch");
  PolicyObjective po = policy_objective(mb);
  if (cfg_.entropy_coef > 0.0) {
    po.objective += cfg_.entropy_coef * policy_.entropy();
    po.gradient.tail(policy_.act_dim()).array() += cfg_.entropy_coef;
  }

  Eigen::RowVectorXd targets(n);
  for (Eigen::Index i = 0; i < n; ++i) targets[i] = mb.returns[static_cast<std::size_t>(i)] / value_scale_;
  double mse = 0.0;
  const OutputLoss value_loss = [&](const Eigen::MatrixXd& out, Eigen::MatrixXd* d_out) {
    const Eigen::RowVectorXd diff = out.row(0) - targets;
    mse = diff.squaredNorm() / static_cast<double>(n);
    if (d_out) *d_out = (2.0 * cfg_.value_coef / static_cast<double>(n)) * diff;
    return cfg_.value_coef * mse;
  };
  const LossGradient vl = backward(value_net_, value_loss, mb.states);

  MinibatchStats s;
  s.size = mb.size();
  s.objective = po.objective;
  s.value_loss = mse;
  s.ratio_second_moment = po.ratio_second_moment;
  s.clamp_events = po.clamp_events;
  s.frac_ratio_outside = fraction_outside(po.ratio, kRatioBandLow, kRatioBandHigh);
  s.mean_staleness = mean_of(mb.staleness);

  if (!std::isfinite(po.objective) || !std::isfinite(mse) || !po.gradient.allFinite() || !vl.gradient.allFinite()) {
    double a_max = 0.0;
    for (double a : mb.advantages) a_max = std::max(a_max, std::abs(a));
    std::ostringstream msg;
    msg << "non-finite loss at iteration " << iteration_ << ": minibatch size " << mb.size() << ", objective "
        << po.objective << ", value mse " << mse << ", ratio second moment " << po.ratio_second_moment
        << ", clamp events " << po.clamp_events << ", max |advantage| " << a_max;
    throw NumericError(msg.str());
  }

  const auto np = po.gradient.size();
  Eigen::VectorXd grad(np + vl.gradient.size());
  grad << -po.gradient, vl.gradient;
  s.grad_norm = clip_grad_norm(grad, cfg_.max_grad_norm);

  Eigen::VectorXd theta = policy_.flat();
  policy_adam_.step(theta, grad.head(np));
  policy_.assign(theta);
  policy_.clamp_log_std();
  Eigen::VectorXd phi = value_net_.params();
  value_adam_.step(phi, grad.tail(vl.gradient.size()));
  value_net_.assign(phi);

  minibatch_ratios_ = std::move(po.ratio);
  return s;
}

void Trainer::dual_step(double measured) {
  if (is_r2vpo(cfg_.algo)) dual_ = update_lambda(std::move(dual_), measured, iteration_);
}

MinibatchStats Trainer::optimize_epochs(const TransitionBatch& batch) {
  const std::size_t n = batch.size();
  const auto bs = static_cast<std::size_t>(cfg_.batch_size);
  std::vector<std::size_t> perm(n);
  std::vector<MinibatchStats> all;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), shuffle_rng_);
    const bool last = epoch + 1 == cfg_.epochs;
    if (last) {
      last_ratios_.clear();
      last_advantages_.clear();
      last_staleness_.clear();
    }
    std::vector<MinibatchStats> parts;
    for (std::size_t b = 0; b < n; b += bs) {
      const std::span<const std::size_t> idx(perm.data() + b, std::min(bs, n - b));
      const TransitionBatch mb = batch.select(idx);
      parts.push_back(optimize_minibatch(mb));
      if (last) {
        last_ratios_.insert(last_ratios_.end(), minibatch_ratios_.begin(), minibatch_ratios_.end());
        last_advantages_.insert(last_advantages_.end(), mb.advantages.begin(), mb.advantages.end());
        last_staleness_.insert(last_staleness_.end(), mb.size(), 0);
      }
    }
    dual_step(merge(parts).ratio_second_moment);
    all.insert(all.end(), parts.begin(), parts.end());
  }
  return merge(all);
}

MinibatchStats Trainer::optimize_replay() {
  if (!replay_ || replay_->empty()) throw std::logic_error("replay optimization needs a non-empty buffer");
  const auto per_iteration = static_cast<std::size_t>(cfg_.parallel_envs) * static_cast<std::size_t>(cfg_.rollout_length);
  const auto bs = static_cast<std::size_t>(cfg_.batch_size);
  const std::size_t per_group = (per_iteration + bs - 1) / bs;
  const int groups = cfg_.replay.utd_ratio * cfg_.epochs;
  std::vector<MinibatchStats> all;
  for (int g = 0; g < groups; ++g) {
    const bool last = g + 1 == groups;
    if (last) {
      last_ratios_.clear();
      last_advantages_.clear();
      last_staleness_.clear();
    }
    for (std::size_t m = 0; m < per_group; ++m) {
      const TransitionBatch mb = replay_->sample_minibatch(bs, replay_rng_);
      const MinibatchStats s = optimize_minibatch(mb);
      dual_step(s.ratio_second_moment);
      all.push_back(s);
      if (last) {
        last_ratios_.insert(last_ratios_.end(), minibatch_ratios_.begin(), minibatch_ratios_.end());
        last_advantages_.insert(last_advantages_.end(), mb.advantages.begin(), mb.advantages.end());
        last_staleness_.insert(last_staleness_.end(), mb.staleness.begin(), mb.staleness.end());
      }
    }
  }
  return merge(all);
}

double Trainer::evaluate() const {
  return evaluate_policy(policy_, obs_stats_, env_cfg_, cfg_.eval_episodes, cfg_.seed);
}

IterationMetrics Trainer::run_iteration() {
  TransitionBatch batch = collect_rollouts();
  IterationMetrics m;
  MinibatchStats s;
  if (replay_) {
    replay_->push_iteration(ReplayEntry{iteration_, std::move(batch)});
    s = optimize_replay();
    m.staleness_histogram = replay_->staleness_histogram(iteration_);
  } else {
    s = optimize_epochs(batch);
    m.staleness_histogram[0] = batch.size();
  }
  ++iteration_;

  m.iteration = iteration_;
  m.env_steps = env_steps_;
  const bool eval_now = iteration_ % cfg_.eval_every == 0 || env_steps_ >= cfg_.total_env_steps;
  m.mean_eval_return = eval_now ? evaluate() : kNaN;
  m.policy_loss = s.objective;
  m.value_loss = s.value_loss;
  m.ratio_second_moment = s.ratio_second_moment;
  m.lambda = is_r2vpo(cfg_.algo) ? dual_.lambda : kNaN;
  m.grad_norm = s.grad_norm;
  m.clamp_events = s.clamp_events;
  m.frac_ratio_outside = s.frac_ratio_outside;
  m.mean_staleness = s.mean_staleness;
  return m;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.env = cfg_.env;
  c.seed = cfg_.seed;
  c.iteration = iteration_;
  c.env_steps = env_steps_;
  c.policy = policy_;
  c.value_net = value_net_;
  c.obs_stats = obs_stats_;
  std::ostringstream rng;
  rng << action_rng_;
  c.rng_state = rng.str();
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  if (c.env != cfg_.env) throw std::invalid_argument("checkpoint environment differs from the configured one");
  if (c.policy.mean_net().layer_sizes() != policy_.mean_net().layer_sizes() ||
      c.value_net.layer_sizes() != value_net_.layer_sizes()) {
    throw std::invalid_argument("checkpoint network shapes differ from the configured ones");
  }
  policy_ = c.policy;
  value_net_ = c.value_net;
  obs_stats_ = c.obs_stats;
  iteration_ = c.iteration;
  env_steps_ = c.env_steps;
}

std::vector<IterationMetrics> Trainer::run(const std::optional<std::filesystem::path>& out_dir) {
  std::ofstream csv;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    csv.open(*out_dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (*out_dir / "metrics.csv").string());
    csv << kMetricsCsvHeader << '\n';
  }
  std::vector<IterationMetrics> series;
  while (env_steps_ < cfg_.total_env_steps) {
    series.push_back(run_iteration());
    if (out_dir) {
      csv << to_csv_row(series.back()) << '\n' << std::flush;
      if (iteration_ % cfg_.eval_every == 0) save_checkpoint(checkpoint(), *out_dir / "checkpoint.txt");
    }
  }
  if (out_dir) {
    save_checkpoint(checkpoint(), *out_dir / "checkpoint.txt");
    if (!last_ratios_.empty()) {
      export_ratio_diagnostics(last_ratios_, last_advantages_, last_staleness_, *out_dir / "ratios.csv");
    }
  }
  return series;
}

std::vector<IterationMetrics> run_on_policy(TrainerConfig cfg, const std::optional<std::filesystem::path>& out_dir) {
  if (cfg.algo == Algo::kR2vpoOff) cfg.algo = Algo::kR2vpoOn;
  cfg.use_replay = false;
  return Trainer(std::move(cfg)).run(out_dir);
}

std::vector<IterationMetrics> run_off_policy(TrainerConfig cfg, const std::optional<std::filesystem::path>& out_dir) {
  if (cfg.algo == Algo::kR2vpoOn) cfg.algo = Algo::kR2vpoOff;
  cfg.use_replay = true;
  return Trainer(std::move(cfg)).run(out_dir);
}

void export_ratio_diagnostics(std::span<const double> ratio, std::span<const double> advantages,
                              std::span<const int> staleness, const std::filesystem::path& path) {
  if (ratio.empty()) throw std::invalid_argument("no ratio samples to export");
  if (advantages.size() != ratio.size() || (!staleness.empty() && staleness.size() != ratio.size())) {
    throw std::invalid_argument("ratio, advantage and staleness lengths differ");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kRatioCsvHeader << '\n';
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    out << format_double(ratio[i]) << ',' << format_double(advantages[i]) << ',' << (staleness.empty() ? 0 : staleness[i])
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace r2vpo
