#include "galab/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "galab/error.hpp"

namespace galab {
namespace {

constexpr int kRolloutCap = 1'000'000;

double angle_normalize(double th) {
  return std::remainder(th, 2.0 * std::numbers::pi);
}

EnvSpec bandit_spec(double a_star) {
  EnvSpec s;
  s.name = "bandit";
  s.state_dim = 1;
  s.action_dim = 1;
  s.action_low = {-1.0};
  s.action_high = {1.0};
  s.r_max = (1.0 + std::abs(a_star)) * (1.0 + std::abs(a_star));
  s.horizon = 1;
  s.gamma = 0.99;
  return s;
}

EnvSpec pointmass_spec() {
  EnvSpec s;
  s.name = "pointmass1d";
  s.state_dim = 2;
  s.action_dim = 1;
  s.action_low = {-1.0};
  s.action_high = {1.0};
  s.r_max = PointMass1D::kXMax * PointMass1D::kXMax + 0.1 * PointMass1D::kVMax * PointMass1D::kVMax;
  s.horizon = 200;
  s.gamma = 0.99;
  s.dt = 0.05;
  s.substeps = 1;
  return s;
}

EnvSpec pendulum_spec() {
  EnvSpec s;
  s.name = "pendulum";
  s.state_dim = 3;
  s.action_dim = 1;
  s.action_low = {-1.0};
  s.action_high = {1.0};
  s.r_max = 17.0;
  s.horizon = 200;
  s.gamma = 0.99;
  s.dt = 0.05;
  s.substeps = 2000;
  return s;
}

}  // namespace

std::vector<double> Env::reset(std::uint64_t seed) {
  state_ = initial_state(seed);
  elapsed_ = 0;
  return state_;
}

void Env::set_state(std::span<const double> state) {
  if (static_cast<int>(state.size()) != spec_.state_dim) {
    throw Error(ErrorCode::ShapeMismatch, "state has the wrong dimension");
  }
  state_.assign(state.begin(), state.end());
  elapsed_ = 0;
}

StepResult Env::step(std::span<const double> action) {
  if (static_cast<int>(action.size()) != spec_.action_dim) {
    throw Error(ErrorCode::ShapeMismatch, "action has the wrong dimension");
  }
  if (state_.empty()) throw Error(ErrorCode::InvalidArgument, "step() before reset()");
  StepResult out;
  std::vector<double> a(action.begin(), action.end());
  for (int d = 0; d < spec_.action_dim; ++d) {
    if (!std::isfinite(a[d])) throw Error(ErrorCode::NonFiniteAction, "action is not finite");
    const double c = std::clamp(a[d], spec_.action_low[d], spec_.action_high[d]);
    if (c != a[d]) out.action_clipped = true;
    a[d] = c;
  }
  SimResult sim = simulate(state_, a);
  ++elapsed_;
  state_ = sim.next_state;
  out.next_state = std::move(sim.next_state);
  out.reward = sim.reward;
  out.time_limit = !sim.terminal && elapsed_ >= spec_.horizon;
  out.done = sim.terminal || out.time_limit;
  return out;
}

// ---------------------------------------------------------------------------

ContinuousBandit::ContinuousBandit(double a_star) : Env(bandit_spec(a_star)), a_star_(a_star) {
  if (!(std::abs(a_star) <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "a* must lie in the action box [-1, 1]");
  }
}

std::vector<double> ContinuousBandit::initial_state(std::uint64_t) const { return {1.0}; }

SimResult ContinuousBandit::simulate(std::span<const double> state,
                                     std::span<const double> action) const {
  return {std::vector<double>(state.begin(), state.end()), q_star(action[0]), true};
}

std::unique_ptr<Env> ContinuousBandit::clone() const {
  return std::make_unique<ContinuousBandit>(*this);
}

// ---------------------------------------------------------------------------

PointMass1D::PointMass1D() : Env(pointmass_spec()) {}

std::vector<double> PointMass1D::initial_state(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uv(-0.2, 0.2);
  const double x = ux(rng);
  return {x, uv(rng)};
}

SimResult PointMass1D::simulate(std::span<const double> state,
                                std::span<const double> action) const {
  const double dt = spec_.dt;
  double v = std::clamp(state[1] + action[0] * dt, -kVMax, kVMax);
  double x = state[0] + v * dt;
  if (x > kXMax || x < -kXMax) {
    x = std::clamp(x, -kXMax, kXMax);
    v = 0.0;
  }
  const double r = -(x * x + 0.1 * v * v);
  return {{x, v}, std::clamp(r, -spec_.r_max, spec_.r_max), false};
}

std::unique_ptr<Env> PointMass1D::clone() const { return std::make_unique<PointMass1D>(*this); }

// ---------------------------------------------------------------------------

Pendulum::Pendulum() : Env(pendulum_spec()) {}

double Pendulum::energy(std::span<const double> obs) {
  const double th = std::atan2(obs[1], obs[0]);
  return 0.5 * obs[2] * obs[2] + 15.0 * std::cos(th);
}

std::vector<double> Pendulum::initial_state(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uth(-std::numbers::pi, std::numbers::pi), uw(-1.0, 1.0);
  const double th = uth(rng);
  return {std::cos(th), std::sin(th), uw(rng)};
}

SimResult Pendulum::simulate(std::span<const double> state, std::span<const double> action) const {
  double th = std::atan2(state[1], state[0]);
  double w = state[2];
  const double u = kMaxTorque * action[0];
  const double cost = angle_normalize(th) * angle_normalize(th) + 0.1 * w * w + 0.001 * u * u;

  const double h = spec_.dt / spec_.substeps;
  for (int i = 0; i < spec_.substeps; ++i) {
    w = std::clamp(w + (15.0 * std::sin(th) + 3.0 * u) * h, -kMaxSpeed, kMaxSpeed);
    th += w * h;
  }
  return {{std::cos(th), std::sin(th), w}, std::clamp(-cost, -spec_.r_max, spec_.r_max), false};
}

std::unique_ptr<Env> Pendulum::clone() const { return std::make_unique<Pendulum>(*this); }

// ---------------------------------------------------------------------------

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "bandit") return std::make_unique<ContinuousBandit>();
  if (name == "pointmass1d") return std::make_unique<PointMass1D>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  throw Error(ErrorCode::ConfigError, "unknown environment '" + std::string(name) + "'");
}

std::vector<double> discounted_returns(const Env& env, const BatchPolicy& policy,
                                       std::span<const std::vector<double>> start_states,
                                       double gamma, double tail_tol) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be in [0,1)");
  const EnvSpec& spec = env.spec();
  const std::size_t n = start_states.size();
  std::vector<long double> ret(n, 0.0L);
  std::vector<std::vector<double>> states(start_states.begin(), start_states.end());
  std::vector<bool> live(n, true);
  std::size_t n_live = n;
  long double discount = 1.0L;

  for (int t = 0; t < kRolloutCap && n_live > 0; ++t) {
    if (discount * spec.r_max / (1.0 - gamma) < tail_tol) break;
    Eigen::MatrixXd batch(spec.state_dim, static_cast<Eigen::Index>(n_live));
    std::vector<std::size_t> idx;
    idx.reserve(n_live);
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      for (int d = 0; d < spec.state_dim; ++d) batch(d, static_cast<Eigen::Index>(idx.size())) = states[i][d];
      idx.push_back(i);
    }
    const Eigen::MatrixXd actions = policy(batch);
    std::vector<double> a(spec.action_dim);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      for (int d = 0; d < spec.action_dim; ++d) {
        a[d] = std::clamp(actions(d, static_cast<Eigen::Index>(j)), spec.action_low[d], spec.action_high[d]);
      }
      SimResult sim = env.simulate(states[idx[j]], a);
      ret[idx[j]] += discount * sim.reward;
      states[idx[j]] = std::move(sim.next_state);
      if (sim.terminal) {
        live[idx[j]] = false;
        --n_live;
      }
    }
    discount *= gamma;
  }
  return {ret.begin(), ret.end()};
}

double true_q_rollout(const Env& env, const BatchPolicy& policy,
                      std::span<const std::vector<double>> start_states, int n_rollouts,
                      double gamma, double tail_tol) {
  if (n_rollouts < 1) throw Error(ErrorCode::InvalidArgument, "n_rollouts must be >= 1");
  if (start_states.empty()) throw Error(ErrorCode::InvalidArgument, "no start states");
  // Dynamics and policy are deterministic, so every repeat of a rollout from
  // the same start returns the same value; one simulation per start suffices.
  const auto returns = discounted_returns(env, policy, start_states, gamma, tail_tol);
  long double s = 0.0L;
  for (double r : returns) s += r;
  return static_cast<double>(s / static_cast<long double>(returns.size()));
}

double true_q_rollout(const Env& env, const Policy& policy,
                      std::span<const std::vector<double>> start_states, int n_rollouts,
                      double gamma, double tail_tol) {
  const int action_dim = env.spec().action_dim;
  BatchPolicy batched = [&](const Eigen::MatrixXd& states) {
    Eigen::MatrixXd out(action_dim, states.cols());
    std::vector<double> s(states.rows());
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
      for (Eigen::Index d = 0; d < states.rows(); ++d) s[d] = states(d, j);
      const auto a = policy(s);
      for (int d = 0; d < action_dim; ++d) out(d, j) = a[d];
    }
    return out;
  };
  return true_q_rollout(env, batched, start_states, n_rollouts, gamma, tail_tol);
}

}  // namespace galab
