#pragma once

#include <cstddef>
#include <vector>

namespace galab {

/// A finite stand-in for Q(s, .): one Q-value per action with a positive
/// measure weight each. `action_volume` is the value used for the action-space
/// integral of 1 in the operator bounds; it defaults to the total measure.
struct QLandscape {
  std::vector<std::vector<double>> actions;  // optional; empty means "index only"
  std::vector<double> q;
  std::vector<double> measure;
  double action_volume = 0.0;

  /// Counting measure over `q`, action_volume = |q|.
  static QLandscape uniform(std::vector<double> q);
  static QLandscape weighted(std::vector<double> q, std::vector<double> measure);

  std::size_t size() const noexcept { return q.size(); }
  double total_measure() const;
  double max_q() const;
  double min_q() const;
  double mean_q() const;

  /// Throws EmptyLandscape / NonFiniteInput / InvalidArgument.
  void validate() const;
};

}  // namespace galab
