#include "galab/tabular_vi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "galab/error.hpp"

namespace galab {
namespace {

constexpr int kIterationCap = 1'000'000;

double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
  return g;
}

}  // namespace

void TabularMdp::validate() const {
  if (n_states < 1 || n_actions < 1) {
    throw Error(ErrorCode::InvalidArgument, "MDP needs at least one state and one action");
  }
  const auto sa = static_cast<std::size_t>(n_states) * n_actions;
  if (transition.size() != sa * n_states || reward.size() != sa) {
    throw Error(ErrorCode::ShapeMismatch, "transition/reward tables have the wrong size");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be in [0,1)");
  if (!(r_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "r_max must be positive");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      long double row = 0.0L;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double pr = p(s, a, s2);
        if (pr < 0.0) throw Error(ErrorCode::InvalidArgument, "negative transition probability");
        row += pr;
      }
      if (std::abs(static_cast<double>(row) - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "transition row (" + std::to_string(s) + "," +
                                                    std::to_string(a) + ") does not sum to 1");
      }
      if (!(std::abs(r(s, a)) <= r_max)) {
        throw Error(ErrorCode::InvalidArgument, "reward exceeds r_max");
      }
    }
  }
}

TabularMdp TabularMdp::random(int n_states, int n_actions, double gamma, double r_max,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(-r_max, r_max);
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.r_max = r_max;
  m.transition.resize(static_cast<std::size_t>(n_states) * n_actions * n_states);
  m.reward.resize(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double* row = &m.transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states];
      long double total = 0.0L;
      for (int s2 = 0; s2 < n_states; ++s2) {
        row[s2] = expo(rng);
        total += row[s2];
      }
      for (int s2 = 0; s2 < n_states; ++s2) row[s2] = static_cast<double>(row[s2] / total);
      m.reward[static_cast<std::size_t>(s) * n_actions + a] = unif(rng);
    }
  }
  return m;
}

std::vector<double> bellman_q(const TabularMdp& mdp, const std::vector<double>& v) {
  std::vector<double> q(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      long double ev = 0.0L;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) ev += static_cast<long double>(mdp.p(s, a, s2)) * v[s2];
      q[static_cast<std::size_t>(s) * mdp.n_actions + a] =
          mdp.r(s, a) + mdp.gamma * static_cast<double>(ev);
    }
  }
  return q;
}

std::vector<double> optimal_values(const TabularMdp& mdp, double tol) {
  mdp.validate();
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  std::vector<double> v(mdp.n_states, 0.0), next(mdp.n_states);
  for (int it = 0; it < kIterationCap; ++it) {
    const auto q = bellman_q(mdp, v);
    for (int s = 0; s < mdp.n_states; ++s) {
      const auto* row = &q[static_cast<std::size_t>(s) * mdp.n_actions];
      next[s] = *std::max_element(row, row + mdp.n_actions);
    }
    const double residual = sup_gap(next, v);
    v.swap(next);
    if (residual <= tol) return v;
  }
  throw Error(ErrorCode::NonConvergence, "value iteration hit the 1e6 sweep cap");
}

ActivationSpec effective_spec(const TabularMdp& mdp, const ActivationSpec& spec) {
  return with_domain_shift(spec, mdp.q_bound());
}

ValueTrace value_iterate_ga(const TabularMdp& mdp, const ActivationSpec& spec, int iters,
                            std::vector<double> v0) {
  mdp.validate();
  if (iters < 1) throw Error(ErrorCode::InvalidArgument, "iters must be positive");
  const ActivationSpec g = effective_spec(mdp, spec);
  validate(g);
  if (v0.empty()) v0.assign(mdp.n_states, 0.0);
  if (static_cast<int>(v0.size()) != mdp.n_states) {
    throw Error(ErrorCode::ShapeMismatch, "v0 has the wrong length");
  }

  ValueTrace trace;
  trace.v_star = optimal_values(mdp);
  trace.values.reserve(iters + 1);
  trace.values.push_back(std::move(v0));
  trace.gaps.push_back(sup_gap(trace.values.back(), trace.v_star));

  const std::vector<double> uniform(mdp.n_actions, 1.0);
  std::vector<double> v(mdp.n_states);
  for (int t = 0; t < iters; ++t) {
    const auto q = bellman_q(mdp, trace.values.back());
    for (int s = 0; s < mdp.n_states; ++s) {
      v[s] = ga_weighted({&q[static_cast<std::size_t>(s) * mdp.n_actions],
                          static_cast<std::size_t>(mdp.n_actions)},
                         uniform, g);
    }
    trace.values.push_back(v);
    trace.gaps.push_back(sup_gap(v, trace.v_star));
  }
  return trace;
}

double default_epsilon(const TabularMdp& mdp, const std::vector<double>& v_star) {
  const auto q = bellman_q(mdp, v_star);
  double spread = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    const auto* row = &q[static_cast<std::size_t>(s) * mdp.n_actions];
    const auto [lo, hi] = std::minmax_element(row, row + mdp.n_actions);
    spread = std::max(spread, *hi - *lo);
  }
  return spread > 0.0 ? 0.1 * spread : 0.1;
}

Theorem2Report theorem2_bound_report(const ValueTrace& trace, const TabularMdp& mdp,
                                     const ActivationSpec& spec, const BoundParams& params) {
  mdp.validate();
  if (trace.values.empty() || trace.values.size() != trace.gaps.size()) {
    throw Error(ErrorCode::InvalidArgument, "trace is empty or inconsistent");
  }
  if (!(params.epsilon > 0.0) || !(params.beta > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon and beta must be positive");
  }
  const ActivationSpec g = effective_spec(mdp, spec);
  const double q_bound = params.q_bound.value_or(mdp.q_bound());
  if (!beta_feasible(g, params.beta, q_bound)) {
    throw Error(ErrorCode::InfeasibleBeta, "g(q) >= exp(beta q) fails on the Q-range for " +
                                               g.describe());
  }

  const double gam = mdp.gamma;
  const double beta = params.beta;
  const double eps = params.epsilon;
  const double n_a = static_cast<double>(mdp.n_actions);

  Theorem2Report rep;
  rep.T_star = t_star(g, beta, q_bound);
  const double constant_part = rep.T_star / (1.0 - gam) + (beta * eps + n_a - 1.0) / ((1.0 - gam) * beta);
  rep.limit = (rep.T_star + eps) / (1.0 - gam) + (n_a - 1.0) / ((1.0 - gam) * beta);

  const double e0 = trace.gaps.front();
  double discounted_lnF = 0.0;  // sum_{k<=t} gam^{t-k} min_s ln F(Q_k)
  double gam_t = 1.0;
  rep.ok = true;
  for (std::size_t t = 0; t < trace.values.size(); ++t) {
    if (t > 0) {
      const auto q = bellman_q(mdp, trace.values[t - 1]);
      double min_lnF = std::numeric_limits<double>::infinity();
      for (int s = 0; s < mdp.n_states; ++s) {
        const auto* row = &q[static_cast<std::size_t>(s) * mdp.n_actions];
        const double top = *std::max_element(row, row + mdp.n_actions);
        int count = 0;
        for (int a = 0; a < mdp.n_actions; ++a) count += row[a] >= top - eps ? 1 : 0;
        min_lnF = std::min(min_lnF, std::log(static_cast<double>(count)));
      }
      discounted_lnF = gam * discounted_lnF + min_lnF;
      gam_t *= gam;
    }
    const double rhs = gam_t * e0 + constant_part - discounted_lnF / beta;
    rep.lhs.push_back(trace.gaps[t]);
    rep.rhs.push_back(rhs);
    if (!(trace.gaps[t] <= rhs)) rep.ok = false;
  }
  return rep;
}

}  // namespace galab
