#include "r2vpo/transition.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace r2vpo {

void TransitionBatch::validate() const {
  const std::size_t n = size();
  const auto cols = static_cast<std::size_t>(states.cols());
  if (cols != n || static_cast<std::size_t>(actions.cols()) != n || dones.size() != n || values.size() != n ||
      log_prob_off.size() != n || advantages.size() != n || returns.size() != n) {
    throw std::invalid_argument("transition batch fields differ in length");
  }
  if (!staleness.empty() && staleness.size() != n) throw std::invalid_argument("staleness length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(advantages[i])) {
      throw std::invalid_argument("non-finite advantage at transition " + std::to_string(i));
    }
  }
}

TransitionBatch TransitionBatch::select(std::span<const std::size_t> indices) const {
  TransitionBatch out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.states.resize(states.rows(), m);
  out.actions.resize(actions.rows(), m);
  out.rewards.reserve(indices.size());
  out.dones.reserve(indices.size());
  out.values.reserve(indices.size());
  out.log_prob_off.reserve(indices.size());
  out.advantages.reserve(indices.size());
  out.returns.reserve(indices.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::size_t i = indices[static_cast<std::size_t>(j)];
    if (i >= size()) throw std::out_of_range("transition index out of range");
    const auto c = static_cast<Eigen::Index>(i);
    out.states.col(j) = states.col(c);
    out.actions.col(j) = actions.col(c);
    out.rewards.push_back(rewards[i]);
    out.dones.push_back(dones[i]);
    out.values.push_back(values[i]);
    out.log_prob_off.push_back(log_prob_off[i]);
    out.advantages.push_back(advantages[i]);
    out.returns.push_back(returns[i]);
    if (!staleness.empty()) out.staleness.push_back(staleness[i]);
  }
  return out;
}

TransitionBatch concatenate(std::span<const TransitionBatch> batches) {
  TransitionBatch out;
  if (batches.empty()) return out;
  Eigen::Index total = 0;
  for (const auto& b : batches) total += static_cast<Eigen::Index>(b.size());
  out.states.resize(batches.front().states.rows(), total);
  out.actions.resize(batches.front().actions.rows(), total);
  Eigen::Index col = 0;
  for (const auto& b : batches) {
    const auto n = static_cast<Eigen::Index>(b.size());
    out.states.middleCols(col, n) = b.states;
    out.actions.middleCols(col, n) = b.actions;
    col += n;
    out.rewards.insert(out.rewards.end(), b.rewards.begin(), b.rewards.end());
    out.dones.insert(out.dones.end(), b.dones.begin(), b.dones.end());
    out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    out.log_prob_off.insert(out.log_prob_off.end(), b.log_prob_off.begin(), b.log_prob_off.end());
    out.advantages.insert(out.advantages.end(), b.advantages.begin(), b.advantages.end());
    out.returns.insert(out.returns.end(), b.returns.begin(), b.returns.end());
  }
  return out;
}

}  // namespace r2vpo
