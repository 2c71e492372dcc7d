#include "odrl/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const Transition& tr) {
  if (data_.size() < capacity_) {
    data_.push_back(tr);
  } else {
    data_[head_] = tr;
    head_ = (head_ + 1) % capacity_;
  }
  ++inserted_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay buffer index out of range");
  return data_[(head_ + i) % data_.size()];
}

const Transition& ReplayBuffer::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  return data_[pick(rng)];
}

std::vector<Transition> relabel_future(const Trajectory& episode, int k, std::mt19937_64& rng) {
  const int horizon = static_cast<int>(episode.num_transitions());
  if (horizon < 1) throw std::invalid_argument("relabeling needs at least one transition");
  if (k < 1) throw std::invalid_argument("relabel count must be positive");
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(horizon) * k);
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < k; ++i) {
      int h = horizon;
      if (t < horizon - 1) {
        std::uniform_int_distribution<int> pick(t + 1, horizon - 1);
        h = pick(rng);
      }
      out.push_back({episode.states[t], episode.actions[t], episode.states[t + 1], episode.states[h]});
    }
  }
  return out;
}

std::vector<double> RewardNormalizer::normalize(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("reward batch is empty");
  std::vector<double> out(rewards.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = rewards[i] / scale;
    max_abs = std::max(max_abs, std::abs(rewards[i]));
  }
  scale = (1.0 - rate) * scale + rate * max_abs;
  return out;
}

}  // namespace odrl
