#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eraseg/error.hpp"
#include "eraseg/rng.hpp"

namespace eraseg {

// One environment step. States are flattened joint observations, stored as
// float to keep large buffers affordable; the shared scalar reward follows
// the common reward design.
struct Transition {
  std::vector<float> state;
  std::vector<float> next_state;
  std::vector<std::uint8_t> actions;  // one per agent head
  float reward = 0.0f;
  bool terminal = false;
};

// Ring buffer with proportional prioritized sampling. Priorities are raw
// (pre-exponent); sampling probabilities are prio^alpha / sum(prio^alpha)
// via a sum tree. New transitions enter at the maximal current priority.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, double alpha, double priority_floor);

  void push(Transition t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  struct Sample {
    std::vector<std::size_t> indices;
    std::vector<double> weights;  // importance weights, max-normalized
  };

  // Proportional sample of `batch` indices (repeats possible). Importance
  // weights are (N * p_i)^-beta normalized by the largest weight in the
  // buffer. Throws DataError when size < batch.
  Sample sample(std::size_t batch, double beta, Rng& rng);

  // Sets priorities of the given slots to |td| + floor.
  void update_priorities(std::span<const std::size_t> indices,
                         std::span<const double> abs_td);

  const Transition& at(std::size_t index) const { return storage_[index]; }
  double priority(std::size_t index) const { return priorities_[index]; }
  double sampling_probability(std::size_t index) const;

 private:
  void set_weight(std::size_t index, double priority);

  std::size_t capacity_;
  double alpha_;
  double floor_;
  std::vector<Transition> storage_;
  std::vector<double> priorities_;  // raw priorities
  std::vector<double> tree_;        // sum tree over prio^alpha
  std::size_t tree_leaves_;
  std::size_t size_ = 0;
  std::size_t next_slot_ = 0;
  double max_priority_ = 1.0;
};

}  // namespace eraseg
