#include "eraseg/replay.hpp"

#include <algorithm>
#include <cmath>

namespace eraseg {

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha,
                           double priority_floor)
    : capacity_(capacity), alpha_(alpha), floor_(priority_floor) {
  if (capacity_ == 0) throw ConfigError("replay: capacity must be > 0");
  if (alpha_ < 0.0) throw ConfigError("replay: alpha must be >= 0");
  if (!(floor_ > 0.0)) throw ConfigError("replay: priority floor must be > 0");
  tree_leaves_ = 1;
  while (tree_leaves_ < capacity_) tree_leaves_ *= 2;
  tree_.assign(2 * tree_leaves_, 0.0);
  storage_.reserve(capacity_);
  priorities_.reserve(capacity_);
}

void ReplayBuffer::set_weight(std::size_t index, double priority) {
  priorities_[index] = priority;
  std::size_t node = tree_leaves_ + index;
  tree_[node] = std::pow(priority, alpha_);
  node /= 2;
  while (node >= 1) {
    tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    node /= 2;
  }
}

void ReplayBuffer::push(Transition t) {
  if (size_ < capacity_) {
    storage_.push_back(std::move(t));
    priorities_.push_back(0.0);
    ++size_;
  } else {
    storage_[next_slot_] = std::move(t);  // oldest slot overwritten
  }
  set_weight(next_slot_, max_priority_);
  next_slot_ = (next_slot_ + 1) % capacity_;
}

ReplayBuffer::Sample ReplayBuffer::sample(std::size_t batch, double beta,
                                          Rng& rng) {
  if (size_ < batch) throw DataError("replay: buffer smaller than batch");
  const double total = tree_[1];
  if (!(total > 0.0)) throw DataError("replay: empty priority mass");

  Sample out;
  out.indices.reserve(batch);
  out.weights.reserve(batch);

  // Largest weight in the buffer corresponds to the smallest probability.
  double min_prob = 1.0;
  for (std::size_t i = 0; i < size_; ++i)
    min_prob = std::min(min_prob, tree_[tree_leaves_ + i] / total);
  const double n = static_cast<double>(size_);
  const double max_weight = std::pow(n * min_prob, -beta);

  for (std::size_t b = 0; b < batch; ++b) {
    double u = rng.uniform() * total;
    std::size_t node = 1;
    while (node < tree_leaves_) {
      const double left = tree_[2 * node];
      if (u < left) {
        node = 2 * node;
      } else {
        u -= left;
        node = 2 * node + 1;
      }
    }
    std::size_t index = node - tree_leaves_;
    if (index >= size_) index = size_ - 1;  // guards fp edge at the boundary
    out.indices.push_back(index);
    const double prob = tree_[tree_leaves_ + index] / total;
    out.weights.push_back(std::pow(n * prob, -beta) / max_weight);
  }
  return out;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> indices,
                                     std::span<const double> abs_td) {
  if (indices.size() != abs_td.size())
    throw DataError("replay: priority update size mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double priority = std::abs(abs_td[i]) + floor_;
    set_weight(indices[i], priority);
    max_priority_ = std::max(max_priority_, priority);
  }
}

double ReplayBuffer::sampling_probability(std::size_t index) const {
  return tree_[tree_leaves_ + index] / tree_[1];
}

}  // namespace eraseg
