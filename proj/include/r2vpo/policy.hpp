#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "r2vpo/mlp.hpp"
#include "r2vpo/rng.hpp"

namespace r2vpo {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct ActionSample {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};

// Diagonal Gaussian policy: state-dependent mean from an MLP, state-independent
// log standard deviation. Actions are unsquashed; bounds are applied by the
// environment.
//
// Flat parameter order: mean-network parameters (Mlp canonical order)
// followed by log_std.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(Mlp mean_net, Eigen::VectorXd log_std);
  // mean net [obs_dim, hidden..., act_dim] with scaled-uniform init, log_std = init_log_std.
  static GaussianPolicy initialized(int obs_dim, const std::vector<int>& hidden, int act_dim, Rng& rng,
                                    double init_log_std = 0.0);

  const Mlp& mean_net() const { return mean_net_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }
  int obs_dim() const { return mean_net_.input_dim(); }
  int act_dim() const { return mean_net_.output_dim(); }

  std::size_t parameter_count() const;
  Eigen::VectorXd flat() const;
  void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);
  // Clamps log_std to [kLogStdMin, kLogStdMax].
  void clamp_log_std();

  Eigen::MatrixXd mean(const Eigen::MatrixXd& states) const;
  // Per-column sum over action dims of -(a-mu)^2/(2 sigma^2) - log sigma - log(2 pi)/2.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;
  // Diagonal Gaussian entropy, identical for every state.
  double entropy() const;

  ActionSample sample_action(const Eigen::VectorXd& state, Rng& rng) const;

 private:
  Mlp mean_net_;
  Eigen::VectorXd log_std_;
};

// Scalar loss over a batch of log-probabilities; fills dL/dlog_prob when set.
using LogProbLoss = std::function<double(const Eigen::VectorXd& log_prob, Eigen::VectorXd* d_log_prob)>;

// Serial reference: one forward/backward over the whole batch.
LossGradient backward(const GaussianPolicy& policy, const LogProbLoss& loss,
                      const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

// The batch is split into `shards` contiguous column ranges processed with
// OpenMP; shard gradients are summed in shard order, so the result depends on
// the shard count but never on the thread count.
LossGradient backward_sharded(const GaussianPolicy& policy, const LogProbLoss& loss,
                              const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                              int shards);

GradientVector finite_diff_gradient(const GaussianPolicy& policy, const LogProbLoss& loss,
                                    const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                    double h);

}  // namespace r2vpo
