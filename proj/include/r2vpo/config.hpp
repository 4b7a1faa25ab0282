#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "r2vpo/advantage.hpp"
#include "r2vpo/dual.hpp"
#include "r2vpo/envs.hpp"
#include "r2vpo/objective.hpp"
#include "r2vpo/replay.hpp"

namespace r2vpo {

enum class Algo { kR2vpoOn, kR2vpoOff, kPpoClip, kGrpoClipHigher };

// "r2vpo-on" | "r2vpo-off" | "ppo" | "grpo-ch"
Algo parse_algo(std::string_view name);
std::string_view to_string(Algo algo);

struct TrainerConfig {
  std::string preset = "desk";
  Algo algo = Algo::kR2vpoOn;
  envs::EnvKind env = envs::EnvKind::kPendulumSwingUp;
  std::uint64_t seed = 0;

  int rollout_length = 30;
  int parallel_envs = 64;
  int epochs = 8;
  // Authoritative; minibatches per epoch = ceil(collected / batch_size).
  int batch_size = 256;
  double learning_rate = 1e-3;
  double max_grad_norm = 2.0;
  long total_env_steps = 2'000'000;
  int eval_every = 10;
  int eval_episodes = 10;

  std::vector<int> policy_hidden = {64, 64};
  std::vector<int> value_hidden = {64, 64};
  double init_log_std = 0.0;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  bool observation_normalization = true;
  // Column shards for the OpenMP policy-gradient kernel; 1 = serial path.
  int gradient_shards = 1;

  AdvantageConfig adv;

  DualMode dual_mode = DualMode::kFixed;
  double lambda0 = 0.06;
  double delta = 0.0;
  double eta_lambda = 5e-3;

  double clip_eps = 0.2;         // symmetric PPO clip
  double clip_eps_low = 0.2;     // clip-higher baseline
  double clip_eps_high = 0.28;

  // Replay harness; always on for r2vpo-off, optional for the clip baselines.
  bool use_replay = false;
  ReplayConfig replay;

  bool uses_replay() const { return use_replay || algo == Algo::kR2vpoOff; }
  ClipConfig clip_config() const;

  // Throws ConfigError naming the first offending key.
  void validate() const;

  bool operator==(const TrainerConfig& other) const;
};

// "desk" (scaled-down defaults) or "paper" (continuous-control table values).
TrainerConfig preset_config(std::string_view preset);

// Applies one key=value pair. Unknown keys and malformed values throw ConfigError.
void set_config_value(TrainerConfig& cfg, std::string_view key, std::string_view value);

// Flat key=value text, one per line, '#' starts a comment. A `preset` line
// selects the base values; the remaining keys override it in file order.
// Parse errors carry the line number.
TrainerConfig parse_config(std::string_view text, std::string_view source = "<config>");
TrainerConfig load_config(const std::filesystem::path& path);

// Every key, values printed with round-trip precision.
std::string dump_config(const TrainerConfig& cfg);

}  // namespace r2vpo
