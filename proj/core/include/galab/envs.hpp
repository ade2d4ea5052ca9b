#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace galab {

/// Static description of an environment. Rewards are always inside
/// [-r_max, r_max]. `dt` is the control period; the integrator takes
/// `substeps` semi-implicit Euler steps per control period.
struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  double r_max = 1.0;
  int horizon = 1;
  double gamma = 0.99;
  double dt = 0.0;
  int substeps = 1;
};

/// `done` closes the episode, either on a terminal state or at the horizon;
/// `time_limit` tells the two apart (a horizon cut is not a terminal state
/// for bootstrapping).
struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;
  bool time_limit = false;
  bool action_clipped = false;
};

struct SimResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool terminal = false;
};

class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& state() const noexcept { return state_; }
  int elapsed() const noexcept { return elapsed_; }

  /// Deterministic initial state for a given seed.
  std::vector<double> reset(std::uint64_t seed);

  /// Out-of-box actions are clipped (and flagged); NaN/inf raise NonFiniteAction.
  StepResult step(std::span<const double> action);

  /// Places the environment at an observed state with a fresh episode clock.
  void set_state(std::span<const double> state);

  /// Pure transition: no clock, no clipping. `action` must lie in the box.
  virtual SimResult simulate(std::span<const double> state, std::span<const double> action) const = 0;

  virtual std::unique_ptr<Env> clone() const = 0;

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual std::vector<double> initial_state(std::uint64_t seed) const = 0;

  EnvSpec spec_;
  std::vector<double> state_;
  int elapsed_ = 0;
};

/// Single state, a in [-1, 1], reward -(a - a*)^2, one-step episodes.
class ContinuousBandit final : public Env {
 public:
  explicit ContinuousBandit(double a_star = 0.3);
  double a_star() const noexcept { return a_star_; }
  /// Exact Q*(a), the one-step reward.
  double q_star(double a) const { return -(a - a_star_) * (a - a_star_); }

  SimResult simulate(std::span<const double> state, std::span<const double> action) const override;
  std::unique_ptr<Env> clone() const override;

 protected:
  std::vector<double> initial_state(std::uint64_t seed) const override;

 private:
  double a_star_;
};

/// State (x, v), unit-acceleration force a in [-1, 1], dt = 0.05, walls at
/// |x| = 2 that stop the mass, speed limit |v| <= 2. Reward -(x^2 + 0.1 v^2)
/// on the post-step state, so r_max = 4.4. Resets draw x ~ U[-1, 1],
/// v ~ U[-0.2, 0.2]. Horizon 200.
class PointMass1D final : public Env {
 public:
  PointMass1D();
  static constexpr double kXMax = 2.0;
  static constexpr double kVMax = 2.0;

  SimResult simulate(std::span<const double> state, std::span<const double> action) const override;
  std::unique_ptr<Env> clone() const override;

 protected:
  std::vector<double> initial_state(std::uint64_t seed) const override;
};

/// Swing-up pendulum with observation (cos th, sin th, thdot), th = 0 upright.
/// Action a in [-1, 1] maps to torque 2a. thdd = 15 sin th + 3 u, |thdot| <= 8.
/// Cost th^2 + 0.1 thdot^2 + 0.001 u^2 on the pre-step state, reward clipped to
/// [-17, 17]. dt = 0.05 integrated with 2000 substeps. Resets draw
/// th ~ U[-pi, pi], thdot ~ U[-1, 1]. Horizon 200.
class Pendulum final : public Env {
 public:
  Pendulum();
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;

  /// Conserved quantity of the torque-free dynamics: thdot^2/2 + 15 cos th.
  static double energy(std::span<const double> observation);

  SimResult simulate(std::span<const double> state, std::span<const double> action) const override;
  std::unique_ptr<Env> clone() const override;

 protected:
  std::vector<double> initial_state(std::uint64_t seed) const override;
};

/// "bandit", "pointmass1d", "pendulum".
std::unique_ptr<Env> make_env(std::string_view name);

using Policy = std::function<std::vector<double>(std::span<const double>)>;
/// Maps a (state_dim x n) matrix of states to (action_dim x n) actions.
using BatchPolicy = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Monte-Carlo mean of sum_t gamma^t r_t from each start state under a
/// deterministic policy, ignoring the episode horizon (the value a critic
/// trained with horizon bootstrapping estimates). A rollout stops at a
/// terminal state or once gamma^t r_max / (1 - gamma) < tail_tol.
double true_q_rollout(const Env& env, const Policy& policy,
                      std::span<const std::vector<double>> start_states, int n_rollouts,
                      double gamma, double tail_tol = 1e-8);

/// Same estimate with the policy evaluated on all live rollouts at once.
double true_q_rollout(const Env& env, const BatchPolicy& policy,
                      std::span<const std::vector<double>> start_states, int n_rollouts,
                      double gamma, double tail_tol = 1e-8);

/// Per-start discounted returns (one entry per start state).
std::vector<double> discounted_returns(const Env& env, const BatchPolicy& policy,
                                       std::span<const std::vector<double>> start_states,
                                       double gamma, double tail_tol = 1e-8);

}  // namespace galab
