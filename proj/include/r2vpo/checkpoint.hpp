#pragma once

#include <filesystem>
#include <string>

#include "r2vpo/advantage.hpp"
#include "r2vpo/envs.hpp"
#include "r2vpo/mlp.hpp"
#include "r2vpo/policy.hpp"

namespace r2vpo {

// Text checkpoint, version 1. One record per line, all reals as C99 hex
// floats so a load restores bit-identical values:
//
//   r2vpo-checkpoint 1
//   env <pendulum|cartpole-sparse|reacher-sparse>
//   seed <u64>
//   iteration <int>
//   env_steps <int>
//   policy_layers <k> <size_0> ... <size_{k-1}>
//   policy_params <n> <p_0> ... <p_{n-1}>        mean-net canonical order
//   log_std <d> <v_0> ... <v_{d-1}>
//   value_layers <k> <size_0> ...
//   value_params <n> <p_0> ...
//   obs_count <c>
//   obs_mean <d> <m_0> ...
//   obs_m2 <d> <s_0> ...
//   rng <mt19937_64 state, space separated>
struct Checkpoint {
  envs::EnvKind env = envs::EnvKind::kPendulumSwingUp;
  std::uint64_t seed = 0;
  long iteration = 0;
  long env_steps = 0;
  GaussianPolicy policy;
  Mlp value_net;
  RunningStats obs_stats;
  std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace r2vpo
