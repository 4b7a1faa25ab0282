#include <benchmark/benchmark.h>

#include <vector>

#include "r2vpo/envs.hpp"
#include "r2vpo/policy.hpp"
#include "r2vpo/rng.hpp"

namespace {

using namespace r2vpo;

struct EnvBatch {
  envs::EnvConfig cfg;
  std::vector<envs::EnvState> states;
  Eigen::MatrixXd actions;
};

EnvBatch make_env_batch(envs::EnvKind kind, int n) {
  EnvBatch b{envs::EnvConfig::defaults(kind), {}, {}};
  Rng rng = make_rng(1, Stream::kTest);
  for (int i = 0; i < n; ++i) b.states.push_back(envs::reset(b.cfg, static_cast<std::uint64_t>(i)).state);
  b.actions.resize(b.cfg.act_dim(), n);
  for (Eigen::Index i = 0; i < b.actions.size(); ++i) b.actions.data()[i] = uniform(rng, -1.0, 1.0);
  return b;
}

void BM_EnvStepSerial(benchmark::State& state) {
  const auto b = make_env_batch(envs::EnvKind::kCartpoleSwingUpSparse, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(envs::step_vectorized_serial(b.states, b.actions, b.cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EnvStepParallel(benchmark::State& state) {
  const auto b = make_env_batch(envs::EnvKind::kCartpoleSwingUpSparse, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(envs::step_vectorized(b.states, b.actions, b.cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct PolicyBatch {
  GaussianPolicy policy;
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
};

PolicyBatch make_policy_batch(int n) {
  Rng rng = make_rng(2, Stream::kTest);
  PolicyBatch b{GaussianPolicy::initialized(5, {64, 64}, 1, rng, 0.0), Eigen::MatrixXd(5, n), Eigen::MatrixXd(1, n)};
  for (Eigen::Index i = 0; i < b.states.size(); ++i) b.states.data()[i] = standard_normal(rng);
  for (Eigen::Index i = 0; i < b.actions.size(); ++i) b.actions.data()[i] = standard_normal(rng);
  return b;
}

const LogProbLoss kMeanLogProb = [](const Eigen::VectorXd& logp, Eigen::VectorXd* d) {
  if (d) d->setConstant(1.0 / static_cast<double>(logp.size()));
  return logp.mean();
};

void BM_PolicyGradientSerial(benchmark::State& state) {
  const auto b = make_policy_batch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(backward(b.policy, kMeanLogProb, b.states, b.actions));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PolicyGradientSharded(benchmark::State& state) {
  const auto b = make_policy_batch(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward_sharded(b.policy, kMeanLogProb, b.states, b.actions, static_cast<int>(state.range(1))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_EnvStepSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_EnvStepParallel)->Arg(64)->Arg(1024);
BENCHMARK(BM_PolicyGradientSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_PolicyGradientSharded)->Args({256, 4})->Args({1024, 4})->Args({1024, 16});

BENCHMARK_MAIN();
