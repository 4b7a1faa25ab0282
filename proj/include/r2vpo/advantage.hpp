#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace r2vpo {

struct AdvantageConfig {
  double gamma = 0.995;
  double lambda_gae = 0.95;
  double reward_scale = 10.0;
  bool normalize_advantages = true;
  int group_size = 8;
  double group_std_epsilon = 1e-6;

  // Throws ConfigError naming the first violated key.
  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// One trajectory segment. values[t] = V(s_t); bootstrap_value = V(s_T) for the
// state following the last step. done[t] cuts both the bootstrap and the trace.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
              std::span<const std::uint8_t> dones, const AdvantageConfig& cfg);

// (r - mean) / (std + eps) per consecutive group of cfg.group_size rewards,
// population std; groups with std < eps get all-zero advantages.
std::vector<double> group_relative(std::span<const double> rewards, const AdvantageConfig& cfg);

std::vector<double> scale_rewards(std::span<const double> rewards, const AdvantageConfig& cfg);

// Shifts to mean 0 and scales to (population) std 1; left centred only when
// the std is below 1e-8.
void normalize_advantages(std::span<double> advantages);

// Streaming per-dimension mean and unbiased variance (Chan et al. merge).
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(int dim);

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& m2() const { return m2_; }
  // Unbiased variance; zero until two samples have been seen.
  Eigen::VectorXd variance() const;

  // batch: dim x n, one observation per column.
  void update(const Eigen::MatrixXd& batch);
  // (x - mean) / sqrt(var + 1e-8), clipped to [-10, 10].
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& batch) const;

  void restore(double count, Eigen::VectorXd mean, Eigen::VectorXd m2);

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

Eigen::MatrixXd update_and_normalize_obs(RunningStats& stats, const Eigen::MatrixXd& batch);

}  // namespace r2vpo
