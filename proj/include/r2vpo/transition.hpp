#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace r2vpo {

// Flattened transitions, one per column / entry, all with equal length.
// States are the normalized observations the policy saw at collection time.
struct TransitionBatch {
  Eigen::MatrixXd states;   // obs_dim x n
  Eigen::MatrixXd actions;  // act_dim x n, unclamped policy samples
  std::vector<double> rewards;  // scaled
  std::vector<std::uint8_t> dones;
  std::vector<double> values;
  std::vector<double> log_prob_off;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<int> staleness;  // filled by replay sampling; empty otherwise

  std::size_t size() const { return rewards.size(); }
  // Throws std::invalid_argument on unequal lengths or non-finite advantages.
  void validate() const;
  TransitionBatch select(std::span<const std::size_t> indices) const;
};

// Concatenates batches in order (staleness is dropped).
TransitionBatch concatenate(std::span<const TransitionBatch> batches);

}  // namespace r2vpo
