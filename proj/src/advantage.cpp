#include "r2vpo/advantage.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "r2vpo/errors.hpp"

namespace r2vpo {

void AdvantageConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma", "gamma must lie in [0, 1)");
  if (!(lambda_gae >= 0.0 && lambda_gae <= 1.0)) throw ConfigError("lambda_gae", "lambda_gae must lie in [0, 1]");
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale", "reward_scale must be positive");
  if (group_size < 2) throw ConfigError("group_size", "group_size must be at least 2");
  if (!(group_std_epsilon > 0.0)) throw ConfigError("group_std_epsilon", "group_std_epsilon must be positive");
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
              std::span<const std::uint8_t> dones, const AdvantageConfig& cfg) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("gae: rewards, values and dones must have equal length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + cfg.gamma * next_value * live - values[t];
    next_adv = delta + cfg.gamma * cfg.lambda_gae * live * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
    next_value = values[t];
  }
  return out;
}

std::vector<double> group_relative(std::span<const double> rewards, const AdvantageConfig& cfg) {
  const auto g = static_cast<std::size_t>(cfg.group_size);
  if (cfg.group_size < 2) throw std::invalid_argument("group_relative: group size must be at least 2");
  if (rewards.empty() || rewards.size() % g != 0) {
    throw std::invalid_argument("group_relative: " + std::to_string(rewards.size()) +
                                " rewards do not split into groups of " + std::to_string(g));
  }
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t start = 0; start < rewards.size(); start += g) {
    const auto group = rewards.subspan(start, g);
    const double mean = std::accumulate(group.begin(), group.end(), 0.0) / static_cast<double>(g);
    double var = 0.0;
    for (double r : group) var += (r - mean) * (r - mean);
    const double std = std::sqrt(var / static_cast<double>(g));
    if (std < cfg.group_std_epsilon) continue;
    for (std::size_t i = 0; i < g; ++i) out[start + i] = (group[i] - mean) / (std + cfg.group_std_epsilon);
  }
  return out;
}

std::vector<double> scale_rewards(std::span<const double> rewards, const AdvantageConfig& cfg) {
  std::vector<double> out(rewards.begin(), rewards.end());
  for (auto& r : out) r *= cfg.reward_scale;
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / n);
  for (auto& a : advantages) {
    a -= mean;
    if (std > 1e-8) a /= std;
  }
}

RunningStats::RunningStats(int dim) : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

Eigen::VectorXd RunningStats::variance() const {
  if (count_ < 2.0) return Eigen::VectorXd::Zero(mean_.size());
  return m2_ / (count_ - 1.0);
}

void RunningStats::update(const Eigen::MatrixXd& batch) {
  if (batch.rows() != mean_.size()) throw std::invalid_argument("RunningStats: dimension mismatch");
  const double n = static_cast<double>(batch.cols());
  if (n == 0.0) return;
  const Eigen::VectorXd batch_mean = batch.rowwise().mean();
  const Eigen::VectorXd batch_m2 = (batch.colwise() - batch_mean).array().square().rowwise().sum();
  const double total = count_ + n;
  const Eigen::VectorXd delta = batch_mean - mean_;
  mean_ += delta * (n / total);
  m2_ += batch_m2 + delta.array().square().matrix() * (count_ * n / total);
  count_ = total;
}

Eigen::MatrixXd RunningStats::normalize(const Eigen::MatrixXd& batch) const {
  if (batch.rows() != mean_.size()) throw std::invalid_argument("RunningStats: dimension mismatch");
  const Eigen::ArrayXd inv_std = (variance().array() + 1e-8).rsqrt();
  Eigen::MatrixXd out = ((batch.colwise() - mean_).array().colwise() * inv_std).matrix();
  return out.cwiseMax(-10.0).cwiseMin(10.0);
}

void RunningStats::restore(double count, Eigen::VectorXd mean, Eigen::VectorXd m2) {
  if (mean.size() != m2.size() || count < 0.0) throw std::invalid_argument("RunningStats: bad restore");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

Eigen::MatrixXd update_and_normalize_obs(RunningStats& stats, const Eigen::MatrixXd& batch) {
  stats.update(batch);
  return stats.normalize(batch);
}

}  // namespace r2vpo
