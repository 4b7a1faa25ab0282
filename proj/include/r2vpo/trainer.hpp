#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "r2vpo/advantage.hpp"
#include "r2vpo/checkpoint.hpp"
#include "r2vpo/config.hpp"
#include "r2vpo/dual.hpp"
#include "r2vpo/envs.hpp"
#include "r2vpo/mlp.hpp"
#include "r2vpo/optimizer.hpp"
#include "r2vpo/policy.hpp"
#include "r2vpo/replay.hpp"
#include "r2vpo/rng.hpp"
#include "r2vpo/transition.hpp"

namespace r2vpo {

struct IterationMetrics {
  long iteration = 0;
  long env_steps = 0;
  double mean_eval_return = 0.0;  // NaN on iterations without evaluation
  double policy_loss = 0.0;       // mean surrogate objective over the iteration's minibatches
  double value_loss = 0.0;        // mean squared error in value-head units
  double ratio_second_moment = 0.0;
  double lambda = 0.0;            // NaN for the clip baselines
  double grad_norm = 0.0;         // mean pre-clip global norm
  std::size_t clamp_events = 0;
  double frac_ratio_outside = 0.0;  // outside (0.5, 2)
  double mean_staleness = 0.0;
  std::map<long, std::size_t> staleness_histogram;
};

inline constexpr std::string_view kMetricsCsvHeader =
    "iteration,env_steps,mean_eval_return,policy_loss,value_loss,ratio_second_moment,lambda,grad_norm,"
    "clamp_events,frac_ratio_outside";
std::string to_csv_row(const IterationMetrics& m);

// Result of one primal step on one minibatch.
struct MinibatchStats {
  std::size_t size = 0;
  double objective = 0.0;
  double value_loss = 0.0;
  double ratio_second_moment = 0.0;
  double grad_norm = 0.0;
  std::size_t clamp_events = 0;
  double frac_ratio_outside = 0.0;
  double mean_staleness = 0.0;
};

// Size-weighted means over a group of minibatches (clamp events summed).
MinibatchStats merge(std::span<const MinibatchStats> parts);

struct PolicyObjective {
  double objective = 0.0;           // maximization target
  Eigen::VectorXd gradient;         // d objective / d policy parameters
  std::vector<double> ratio;
  double ratio_second_moment = 0.0;
  std::size_t clamp_events = 0;
};

// Mean undiscounted, unscaled return of deterministic (mean-action) episodes.
// Episode k starts from reset(split_seed(seed, kEval, k)). Observations are
// normalized with `stats` when it has seen data.
double evaluate_policy(const GaussianPolicy& policy, const RunningStats& stats, const envs::EnvConfig& env,
                       int episodes, std::uint64_t seed);

class Trainer {
 public:
  explicit Trainer(TrainerConfig cfg);

  const TrainerConfig& config() const { return cfg_; }
  const envs::EnvConfig& env_config() const { return env_cfg_; }
  const GaussianPolicy& policy() const { return policy_; }
  const Mlp& value_net() const { return value_net_; }
  const RunningStats& obs_stats() const { return obs_stats_; }
  const DualState& dual() const { return dual_; }
  const ReplayBuffer* replay() const { return replay_ ? &*replay_ : nullptr; }
  long iteration() const { return iteration_; }
  long env_steps() const { return env_steps_; }
  // Output scale of the value head: V(s) = value_scale() * net(s).
  double value_scale() const { return value_scale_; }

  // parallel_envs x rollout_length transitions, time-major
  // (column t * parallel_envs + env).
  TransitionBatch collect_rollouts();

  // Surrogate for the configured algorithm on one minibatch, without stepping.
  PolicyObjective policy_objective(const TransitionBatch& minibatch) const;

  // One Adam step on policy and value net, global norm clipping.
  MinibatchStats optimize_minibatch(const TransitionBatch& minibatch);

  // K shuffled epochs over `batch`; dual update after each epoch.
  MinibatchStats optimize_epochs(const TransitionBatch& batch);

  // utd x epochs x minibatches uniform replay steps, dual update after each.
  MinibatchStats optimize_replay();

  double evaluate() const;

  // Collect, optimize, then evaluate when iteration() hits a multiple of
  // eval_every or the step budget is spent. Increments iteration().
  IterationMetrics run_iteration();

  // Runs until total_env_steps. With an output directory, writes metrics.csv
  // and ratios.csv, a checkpoint every eval_every iterations and a final one.
  std::vector<IterationMetrics> run(const std::optional<std::filesystem::path>& out_dir = std::nullopt);

  Checkpoint checkpoint() const;
  // Restores networks, observation statistics and counters. Optimizer moments
  // and random streams are not part of a checkpoint and restart fresh.
  void restore(const Checkpoint& ckpt);

  // Per-sample ratio, advantage and staleness from the last epoch of the most
  // recent optimization pass (the last utd group in replay mode).
  const std::vector<double>& last_epoch_ratios() const { return last_ratios_; }
  const std::vector<double>& last_epoch_advantages() const { return last_advantages_; }
  const std::vector<int>& last_epoch_staleness() const { return last_staleness_; }

 private:
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& raw, bool update);
  void reset_slot(std::size_t slot);
  void dual_step(double measured);

  TrainerConfig cfg_;
  envs::EnvConfig env_cfg_;
  GaussianPolicy policy_;
  Mlp value_net_;
  RunningStats obs_stats_;
  Adam policy_adam_;
  Adam value_adam_;
  DualState dual_;
  std::optional<ReplayBuffer> replay_;
  double value_scale_ = 1.0;

  Rng action_rng_;
  Rng shuffle_rng_;
  Rng replay_rng_;

  std::vector<envs::EnvState> env_states_;
  std::vector<std::uint64_t> episodes_started_;
  long iteration_ = 0;
  long env_steps_ = 0;

  std::vector<double> last_ratios_;
  std::vector<double> last_advantages_;
  std::vector<int> last_staleness_;
  std::vector<double> minibatch_ratios_;
};

std::vector<IterationMetrics> run_on_policy(TrainerConfig cfg,
                                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);
std::vector<IterationMetrics> run_off_policy(TrainerConfig cfg,
                                             const std::optional<std::filesystem::path>& out_dir = std::nullopt);

inline constexpr std::string_view kRatioCsvHeader = "ratio,advantage,staleness";
// One row per sample. Empty staleness means all zero. Throws on an empty
// input, unequal lengths or an unwritable path.
void export_ratio_diagnostics(std::span<const double> ratio, std::span<const double> advantages,
                              std::span<const int> staleness, const std::filesystem::path& path);

}  // namespace r2vpo
