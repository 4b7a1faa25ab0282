#include "r2vpo/replay.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "r2vpo/errors.hpp"

namespace r2vpo {

void ReplayConfig::validate() const {
  if (capacity_iterations < 1) throw ConfigError("replay_capacity", "replay_capacity must be at least 1");
  if (utd_ratio < 1) throw ConfigError("utd_ratio", "utd_ratio must be at least 1");
}

ReplayBuffer::ReplayBuffer(ReplayConfig cfg) : cfg_(cfg) { cfg_.validate(); }

long ReplayBuffer::latest_iteration() const {
  if (entries_.empty()) throw std::logic_error("replay buffer is empty");
  return entries_.back().iteration_id;
}

void ReplayBuffer::push_iteration(ReplayEntry entry) {
  entry.batch.validate();
  if (entry.batch.size() == 0) throw std::invalid_argument("cannot store an empty iteration");
  if (!entries_.empty() && entry.iteration_id < entries_.back().iteration_id) {
    throw std::invalid_argument("iteration ids must be non-decreasing");
  }
  entry.batch.staleness.clear();
  total_ += entry.batch.size();
  entries_.push_back(std::move(entry));
  while (entries_.size() > static_cast<std::size_t>(cfg_.capacity_iterations)) {
    total_ -= entries_.front().batch.size();
    entries_.pop_front();
  }
}

TransitionBatch ReplayBuffer::sample_minibatch(std::size_t size, Rng& rng) const {
  if (entries_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  std::vector<std::size_t> starts;
  starts.reserve(entries_.size());
  std::size_t acc = 0;
  for (const auto& e : entries_) {
    starts.push_back(acc);
    acc += e.batch.size();
  }
  std::uniform_int_distribution<std::size_t> pick(0, total_ - 1);
  const long current = latest_iteration();

  TransitionBatch out;
  const auto& first = entries_.front().batch;
  out.states.resize(first.states.rows(), static_cast<Eigen::Index>(size));
  out.actions.resize(first.actions.rows(), static_cast<Eigen::Index>(size));
  out.rewards.resize(size);
  out.dones.resize(size);
  out.values.resize(size);
  out.log_prob_off.resize(size);
  out.advantages.resize(size);
  out.returns.resize(size);
  out.staleness.resize(size);
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t g = pick(rng);
    const auto e = static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), g) - starts.begin() - 1);
    const std::size_t j = g - starts[e];
    const auto& src = entries_[e].batch;
    const auto c = static_cast<Eigen::Index>(k);
    const auto s = static_cast<Eigen::Index>(j);
    out.states.col(c) = src.states.col(s);
    out.actions.col(c) = src.actions.col(s);
    out.rewards[k] = src.rewards[j];
    out.dones[k] = src.dones[j];
    out.values[k] = src.values[j];
    out.log_prob_off[k] = src.log_prob_off[j];
    out.advantages[k] = src.advantages[j];
    out.returns[k] = src.returns[j];
    out.staleness[k] = static_cast<int>(current - entries_[e].iteration_id);
  }
  return out;
}

std::map<long, std::size_t> ReplayBuffer::staleness_histogram(long current_iter) const {
  std::map<long, std::size_t> hist;
  for (const auto& e : entries_) hist[current_iter - e.iteration_id] += e.batch.size();
  return hist;
}

}  // namespace r2vpo
