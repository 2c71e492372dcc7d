#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "odrl/mdp.hpp"

namespace odrl {

/// One stored step (s, a, s', g).
struct Transition {
  StateId s = 0;
  ActionId a = 0;
  StateId s_next = 0;
  StateId g = 0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Fixed-capacity ring buffer with FIFO eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& tr);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }
  /// Total number of pushes, including evicted entries.
  std::size_t inserted() const { return inserted_; }

  /// i-th oldest live entry.
  const Transition& at(std::size_t i) const;
  /// Uniform draw over the live entries. Precondition: non-empty.
  const Transition& sample(std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // slot of the oldest entry once full
  std::size_t inserted_ = 0;
};

/// Future-style hindsight relabeling. For step t and each of k draws, picks h uniformly in
/// t < h <= H - 1 and emits (s_t, a_t, s_{t+1}, s_h). The last step has no strict future and
/// is relabeled with the terminal state s_H.
std::vector<Transition> relabel_future(const Trajectory& episode, int k, std::mt19937_64& rng);

/// Scales rewards by a running average of the batch-maximum magnitude.
struct RewardNormalizer {
  double scale = 1.0;
  double rate = 0.001;

  /// Returns r / C_i for the batch, then C_{i+1} = (1 - rate) C_i + rate * max|r|.
  std::vector<double> normalize(std::span<const double> rewards);
};

}  // namespace odrl
