#pragma once

#include <cstddef>
#include <deque>
#include <map>

#include "r2vpo/rng.hpp"
#include "r2vpo/transition.hpp"

namespace r2vpo {

// One collection iteration, stored whole. Advantages, return targets and
// log pi_off are frozen at collection time.
struct ReplayEntry {
  long iteration_id = 0;
  TransitionBatch batch;
};

struct ReplayConfig {
  int capacity_iterations = 4;
  int utd_ratio = 2;

  void validate() const;
};

// FIFO buffer with whole-iteration granularity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(ReplayConfig cfg);

  const ReplayConfig& config() const { return cfg_; }
  std::size_t iterations() const { return entries_.size(); }
  std::size_t transitions() const { return total_; }
  bool empty() const { return entries_.empty(); }
  const std::deque<ReplayEntry>& entries() const { return entries_; }
  // Newest stored iteration id (the current policy version).
  long latest_iteration() const;

  // Appends; evicts the oldest iteration once more than capacity are held.
  void push_iteration(ReplayEntry entry);

  // `size` transitions drawn uniformly with replacement over everything
  // stored; staleness = latest_iteration() - iteration_id per sample.
  TransitionBatch sample_minibatch(std::size_t size, Rng& rng) const;

  // staleness -> transition count; sums to transitions().
  std::map<long, std::size_t> staleness_histogram(long current_iter) const;

 private:
  ReplayConfig cfg_;
  std::deque<ReplayEntry> entries_;
  std::size_t total_ = 0;
};

}  // namespace r2vpo
