#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <random>
#include <vector>

namespace galab {

/// One experience tuple. `d` is 1 only for true terminal states.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s2;
  double d = 0.0;
};

/// Column-per-sample minibatch.
struct Batch {
  Eigen::MatrixXd s;   // state_dim x B
  Eigen::MatrixXd a;   // action_dim x B
  Eigen::VectorXd r;
  Eigen::MatrixXd s2;  // state_dim x B
  Eigen::VectorXd d;

  Eigen::Index size() const { return r.size(); }
};

/// Bounded FIFO ring: once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  ReplayBuffer(int state_dim, int action_dim, std::size_t capacity = 1'000'000);

  void push(const Transition& t);
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  int state_dim() const noexcept { return state_dim_; }
  int action_dim() const noexcept { return action_dim_; }

  /// Entry i in insertion order among the current contents (0 = oldest).
  Transition at(std::size_t i) const;

  /// `n` indices drawn uniformly with replacement.
  Batch sample(std::size_t n, std::mt19937_64& rng) const;
  Batch gather(const std::vector<std::size_t>& slots) const;

  /// Raw storage slot of a uniformly drawn entry.
  std::size_t sample_slot(std::mt19937_64& rng) const;
  std::vector<double> state_at_slot(std::size_t slot) const;

 private:
  int state_dim_;
  int action_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<double> s_, a_, r_, s2_, d_;
};

}  // namespace galab
