#include "r2vpo/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "r2vpo/errors.hpp"

namespace r2vpo {

Mlp::Mlp(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("MLP needs at least input and output sizes");
  for (int s : layer_sizes_) {
    if (s <= 0) throw std::invalid_argument("MLP layer sizes must be positive");
  }
  build_offsets();
}

void Mlp::build_offsets() {
  weight_offsets_.clear();
  bias_offsets_.clear();
  std::size_t offset = 0;
  for (std::size_t k = 0; k + 1 < layer_sizes_.size(); ++k) {
    const auto in = static_cast<std::size_t>(layer_sizes_[k]);
    const auto out = static_cast<std::size_t>(layer_sizes_[k + 1]);
    weight_offsets_.push_back(offset);
    offset += out * in;
    bias_offsets_.push_back(offset);
    offset += out;
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

Mlp Mlp::scaled_uniform(std::vector<int> layer_sizes, Rng& rng) {
  Mlp net(std::move(layer_sizes));
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const double fan_in = net.layer_sizes_[k];
    const double fan_out = net.layer_sizes_[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto w = net.weight(k);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng, -limit, limit);
    }
  }
  return net;
}

Mlp::ConstWeightMap Mlp::weight(std::size_t layer) const {
  return ConstWeightMap(params_.data() + weight_offsets_[layer], layer_sizes_[layer + 1],
                        layer_sizes_[layer]);
}

Mlp::WeightMap Mlp::weight(std::size_t layer) {
  return WeightMap(params_.data() + weight_offsets_[layer], layer_sizes_[layer + 1],
                   layer_sizes_[layer]);
}

Mlp::ConstBiasMap Mlp::bias(std::size_t layer) const {
  return ConstBiasMap(params_.data() + bias_offsets_[layer], layer_sizes_[layer + 1]);
}

Mlp::BiasMap Mlp::bias(std::size_t layer) {
  return BiasMap(params_.data() + bias_offsets_[layer], layer_sizes_[layer + 1]);
}

void Mlp::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != params_.size()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(flat.size()) +
                                " entries, network expects " + std::to_string(params_.size()));
  }
  params_ = flat;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw std::invalid_argument("input dimension " + std::to_string(inputs.rows()) +
                                " does not match network input " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t k = 0; k < num_layers(); ++k) {
    Eigen::MatrixXd z = weight(k) * a;
    z.colwise() += bias(k);
    if (k + 1 < num_layers()) z = z.array().tanh();
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, Tape& tape) const {
  if (inputs.rows() != input_dim()) {
    throw std::invalid_argument("input dimension " + std::to_string(inputs.rows()) +
                                " does not match network input " + std::to_string(input_dim()));
  }
  tape.activations.resize(num_layers() + 1);
  tape.activations[0] = inputs;
  for (std::size_t k = 0; k < num_layers(); ++k) {
    Eigen::MatrixXd z = weight(k) * tape.activations[k];
    z.colwise() += bias(k);
    if (k + 1 < num_layers()) z = z.array().tanh();
    tape.activations[k + 1] = std::move(z);
  }
  return tape.activations.back();
}

void Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_outputs,
                   Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient length mismatch");
  if (tape.activations.size() != num_layers() + 1) throw std::invalid_argument("tape does not match network");
  for (std::size_t k = 0; k < tape.activations.size(); ++k) {
    if (!tape.activations[k].allFinite()) {
      throw NumericError(k == 0 ? std::string("non-finite network input")
                                : "non-finite activation in layer " + std::to_string(k - 1));
    }
  }
  if (!d_outputs.allFinite()) throw NumericError("non-finite loss gradient at network output");

  Eigen::MatrixXd delta = d_outputs;
  for (std::size_t k = num_layers(); k-- > 0;) {
    const Eigen::MatrixXd& a_in = tape.activations[k];
    WeightMap d_w(grad.data() + weight_offsets_[k], layer_sizes_[k + 1], layer_sizes_[k]);
    BiasMap d_b(grad.data() + bias_offsets_[k], layer_sizes_[k + 1]);
    d_w.noalias() += delta * a_in.transpose();
    d_b += delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd d_a = weight(k).transpose() * delta;
    delta = d_a.array() * (1.0 - a_in.array().square());
  }
}

Eigen::VectorXd forward_value(const Mlp& net, const Eigen::MatrixXd& states) {
  if (net.output_dim() != 1) throw std::invalid_argument("value network must have a scalar output");
  return net.forward(states).row(0).transpose();
}

LossGradient backward(const Mlp& net, const OutputLoss& loss, const Eigen::MatrixXd& inputs) {
  Mlp::Tape tape;
  const Eigen::MatrixXd out = net.forward(inputs, tape);
  Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  LossGradient result;
  result.loss = loss(out, &d_out);
  result.gradient = GradientVector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  net.backward(tape, d_out, result.gradient);
  return result;
}

GradientVector finite_diff_gradient(const Mlp& net, const OutputLoss& loss,
                                    const Eigen::MatrixXd& inputs, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Mlp probe = net;
  Eigen::VectorXd theta = net.params();
  GradientVector grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    probe.assign(theta);
    const double up = loss(probe.forward(inputs), nullptr);
    theta[i] = saved - h;
    probe.assign(theta);
    const double down = loss(probe.forward(inputs), nullptr);
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace r2vpo
