#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "r2vpo/rng.hpp"

namespace r2vpo {

using GradientVector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fully connected network: tanh on hidden layers, identity output.
//
// Batches are column-major: one sample per column, so an input batch is
// input_dim x batch and the output is output_dim x batch.
//
// All parameters live in one flat vector. Canonical order is layer-major,
// weights before biases, weights row-major (out x in). GradientVector uses
// the same indices.
class Mlp {
 public:
  using WeightMap = Eigen::Map<RowMatrix>;
  using ConstWeightMap = Eigen::Map<const RowMatrix>;
  using BiasMap = Eigen::Map<Eigen::VectorXd>;
  using ConstBiasMap = Eigen::Map<const Eigen::VectorXd>;

  // Activations recorded by forward() for a subsequent backward().
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;  // [0] = inputs, [k] = output of layer k-1
  };

  Mlp() = default;
  // All parameters zero.
  explicit Mlp(std::vector<int> layer_sizes);
  // Weights ~ U(+-sqrt(6 / (fan_in + fan_out))), biases 0.
  static Mlp scaled_uniform(std::vector<int> layer_sizes, Rng& rng);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  std::size_t num_layers() const { return layer_sizes_.size() - 1; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  ConstWeightMap weight(std::size_t layer) const;
  WeightMap weight(std::size_t layer);
  ConstBiasMap bias(std::size_t layer) const;
  BiasMap bias(std::size_t layer);

  const Eigen::VectorXd& params() const { return params_; }
  void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Tape& tape) const;

  // Adds dL/dparams to `grad` given dL/doutputs for the taped batch.
  // Throws NumericError naming the layer if a taped activation is non-finite.
  void backward(const Tape& tape, const Eigen::MatrixXd& d_outputs,
                Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  void build_offsets();

  std::vector<int> layer_sizes_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  Eigen::VectorXd params_;
};

struct LossGradient {
  double loss = 0.0;
  GradientVector gradient;
};

// Scalar loss over network outputs; fills dL/doutputs when the pointer is set.
using OutputLoss = std::function<double(const Eigen::MatrixXd& outputs, Eigen::MatrixXd* d_outputs)>;

// One scalar per column.
Eigen::VectorXd forward_value(const Mlp& net, const Eigen::MatrixXd& states);

LossGradient backward(const Mlp& net, const OutputLoss& loss, const Eigen::MatrixXd& inputs);

// Central differences (L(p + h e_i) - L(p - h e_i)) / 2h for every parameter.
GradientVector finite_diff_gradient(const Mlp& net, const OutputLoss& loss,
                                    const Eigen::MatrixXd& inputs, double h);

}  // namespace r2vpo
