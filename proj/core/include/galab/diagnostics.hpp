#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "galab/activation.hpp"
#include "galab/agents.hpp"
#include "galab/envs.hpp"
#include "galab/replay_buffer.hpp"

namespace galab {

struct BiasSample {
  long step = 0;
  double estimate = 0.0;    // mean critic prediction Q(s, pi(s))
  double true_value = 0.0;  // mean discounted rollout return from s
  double bias = 0.0;        // estimate - true_value
};

/// Maps (states, actions), one sample per column, to critic values.
using BatchCritic = std::function<Eigen::VectorXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;

/// Compares the mean critic value at (s, pi(s)) against rollouts of pi from s.
BiasSample measure_bias(long step, const BatchCritic& critic, const BatchPolicy& policy,
                        const Env& env, std::span<const std::vector<double>> start_states,
                        int n_rollouts, double gamma);

/// Draws `n_states` start states uniformly from the buffer and measures the
/// bias of the agent's critic 1 under its evaluation policy.
BiasSample measure_bias(long step, const Agent& agent, const Env& env, const ReplayBuffer& buffer,
                        int n_states, int n_rollouts, std::mt19937_64& rng);

/// Periodic bias measurement during training.
class BiasMonitor {
 public:
  explicit BiasMonitor(long cadence = 10'000, int n_states = 64, int n_rollouts = 10);

  long cadence() const noexcept { return cadence_; }
  bool due(long step) const noexcept { return step > 0 && step % cadence_ == 0; }
  /// Measures at `step` if due and the buffer is non-empty; returns whether it did.
  bool maybe_record(long step, const Agent& agent, const Env& env, const ReplayBuffer& buffer,
                    std::mt19937_64& rng);
  const std::vector<BiasSample>& trace() const noexcept { return trace_; }

 private:
  long cadence_;
  int n_states_;
  int n_rollouts_;
  std::vector<BiasSample> trace_;
};

/// Noisy critics: each evaluation returns true_q + eta * N(0, 1), drawn
/// independently per action and per critic copy.
struct NoiseModel {
  std::vector<double> true_q;
  double eta = 0.5;
  int critics = 2;  // copies combined by pointwise min in the double estimator
  long trials = 100'000;

  void validate() const;
};

struct BiasOrdering {
  double bias_max_single = 0.0;
  double bias_ga_single = 0.0;
  double bias_ga_min_pair = 0.0;
  double se_max_single = 0.0;
  double se_ga_single = 0.0;
  double se_ga_min_pair = 0.0;
  /// Standard errors of the paired per-trial differences used by the check.
  double se_single_vs_max = 0.0;
  double se_pair_vs_single = 0.0;
  bool orderings_ok = false;
};

/// Bias against max(true_q) of: max over one noisy critic, GA over one noisy
/// critic, and GA over the pointwise min of `critics` noisy critics.
/// orderings_ok checks bias_ga_min_pair <= bias_ga_single <= bias_max_single
/// with 3-sigma slack on each paired difference. Noisy values are clamped to
/// +-(max|Q| + 8 eta), and polynomial/linear activations are shifted onto
/// that range.
BiasOrdering synthetic_bias_ordering(const NoiseModel& model, const ActivationSpec& spec,
                                     std::uint64_t seed);

}  // namespace galab
