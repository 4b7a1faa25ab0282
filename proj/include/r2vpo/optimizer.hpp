#pragma once

#include <Eigen/Dense>

namespace r2vpo {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

// Adam on a flat parameter vector; step() descends the given gradient.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, AdamConfig cfg);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  long steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long steps_ = 0;
};

// Rescales grad so its L2 norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace r2vpo
