#include "galab/replay_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "galab/error.hpp"

namespace galab {

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::size_t capacity)
    : state_dim_(state_dim), action_dim_(action_dim), capacity_(capacity) {
  if (state_dim <= 0 || action_dim <= 0) throw Error(ErrorCode::InvalidArgument, "dimensions must be positive");
  if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<int>(t.s.size()) != state_dim_ || static_cast<int>(t.s2.size()) != state_dim_ ||
      static_cast<int>(t.a.size()) != action_dim_) {
    throw Error(ErrorCode::ShapeMismatch, "transition does not match buffer dimensions");
  }
  if (t.d != 0.0 && t.d != 1.0) throw Error(ErrorCode::InvalidArgument, "done flag must be 0 or 1");
  if (!std::isfinite(t.r)) throw Error(ErrorCode::NonFiniteInput, "reward is not finite");

  // Storage grows lazily so small runs do not reserve the full capacity.
  const std::size_t slot = head_;
  if (size_ < capacity_ && slot == r_.size()) {
    s_.insert(s_.end(), t.s.begin(), t.s.end());
    a_.insert(a_.end(), t.a.begin(), t.a.end());
    r_.push_back(t.r);
    s2_.insert(s2_.end(), t.s2.begin(), t.s2.end());
    d_.push_back(t.d);
  } else {
    std::copy(t.s.begin(), t.s.end(), s_.begin() + slot * state_dim_);
    std::copy(t.a.begin(), t.a.end(), a_.begin() + slot * action_dim_);
    r_[slot] = t.r;
    std::copy(t.s2.begin(), t.s2.end(), s2_.begin() + slot * state_dim_);
    d_[slot] = t.d;
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw Error(ErrorCode::InvalidArgument, "replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  const std::size_t slot = (oldest + i) % capacity_;
  Transition t;
  t.s.assign(s_.begin() + slot * state_dim_, s_.begin() + (slot + 1) * state_dim_);
  t.a.assign(a_.begin() + slot * action_dim_, a_.begin() + (slot + 1) * action_dim_);
  t.r = r_[slot];
  t.s2.assign(s2_.begin() + slot * state_dim_, s2_.begin() + (slot + 1) * state_dim_);
  t.d = d_[slot];
  return t;
}

std::size_t ReplayBuffer::sample_slot(std::mt19937_64& rng) const {
  if (size_ == 0) throw Error(ErrorCode::InvalidArgument, "cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  return pick(rng);
}

std::vector<double> ReplayBuffer::state_at_slot(std::size_t slot) const {
  if (slot >= size_) throw Error(ErrorCode::InvalidArgument, "replay slot out of range");
  return {s_.begin() + slot * state_dim_, s_.begin() + (slot + 1) * state_dim_};
}

Batch ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = sample_slot(rng);
  return gather(slots);
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  Batch b;
  b.s.resize(state_dim_, n);
  b.a.resize(action_dim_, n);
  b.r.resize(n);
  b.s2.resize(state_dim_, n);
  b.d.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t slot = slots[j];
    if (slot >= size_) throw Error(ErrorCode::InvalidArgument, "replay slot out of range");
    for (int k = 0; k < state_dim_; ++k) {
      b.s(k, j) = s_[slot * state_dim_ + k];
      b.s2(k, j) = s2_[slot * state_dim_ + k];
    }
    for (int k = 0; k < action_dim_; ++k) b.a(k, j) = a_[slot * action_dim_ + k];
    b.r(j) = r_[slot];
    b.d(j) = d_[slot];
  }
  return b;
}

}  // namespace galab
