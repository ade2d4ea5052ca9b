#pragma once

#include <cstdint>
#include <vector>

#include "galab/activation.hpp"
#include "galab/ga_operator.hpp"

namespace galab {

/// Finite MDP with P(s'|s,a) stored as transition[(s * n_actions + a) * n_states + s']
/// and r(s,a) as reward[s * n_actions + a].
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward;
  double gamma = 0.9;
  double r_max = 1.0;

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

  /// |Q| <= r_max / (1 - gamma) for every policy.
  double q_bound() const { return r_max / (1.0 - gamma); }

  /// Rows sum to 1 within 1e-12, |r| <= r_max, gamma in [0, 1).
  void validate() const;

  /// Dirichlet(1)-style random rows and rewards uniform in [-r_max, r_max].
  static TabularMdp random(int n_states, int n_actions, double gamma, double r_max,
                           std::uint64_t seed);
};

/// Q(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) V(s'), row-major [s][a].
std::vector<double> bellman_q(const TabularMdp& mdp, const std::vector<double>& v);

/// Max-operator value iteration to sup-norm residual <= tol (cap 1e6 sweeps).
std::vector<double> optimal_values(const TabularMdp& mdp, double tol = 1e-10);

struct ValueTrace {
  std::vector<std::vector<double>> values;  // V_0 .. V_T
  std::vector<double> gaps;                 // ||V_t - V*||_inf
  std::vector<double> v_star;
};

/// V_{t+1}(s) = GA over a of Q_{t+1}(s, a). Polynomial and linear weights get
/// the Q-range shift r_max/(1-gamma) + 1 (see with_domain_shift).
ValueTrace value_iterate_ga(const TabularMdp& mdp, const ActivationSpec& spec, int iters,
                            std::vector<double> v0 = {});

/// The spec that value_iterate_ga actually weights with.
ActivationSpec effective_spec(const TabularMdp& mdp, const ActivationSpec& spec);

struct Theorem2Report {
  std::vector<double> lhs;  // ||V_t - V*||
  std::vector<double> rhs;  // gamma^t ||V_0 - V*|| + N_t
  double T_star = 0.0;
  double limit = 0.0;       // (T* + eps)/(1-gamma) + (|A|-1)/((1-gamma) beta)
  bool ok = false;
};

/// Per-iteration value-iteration bound with
///   N_t = T*/(1-g) + (beta eps + |A| - 1)/((1-g) beta)
///         - sum_{k=1..t} g^{t-k} min_s ln F(Q_k, s, eps) / beta,
/// where Q_k is the Bellman backup of V_{k-1} and F counts greedy-set actions.
/// Throws InfeasibleBeta when g(q) >= exp(beta q) fails on the Q-range.
Theorem2Report theorem2_bound_report(const ValueTrace& trace, const TabularMdp& mdp,
                                     const ActivationSpec& spec, const BoundParams& params);

/// 0.1 times the largest per-state spread of Q*, or 0.1 if Q* is flat.
double default_epsilon(const TabularMdp& mdp, const std::vector<double>& v_star);

}  // namespace galab
