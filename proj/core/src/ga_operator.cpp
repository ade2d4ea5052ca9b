#include "galab/ga_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "galab/error.hpp"

namespace galab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive and finite");
  }
}

// Shared body of the discrete and importance-sampled estimators: the weighted
// mean of q under weights g(q_i) * mu_i. Returns {value, stderr, effective n}.
IsEstimate weighted_mean(std::span<const double> q, std::span<const double> mu,
                         const ActivationSpec& spec) {
  if (q.empty()) throw Error(ErrorCode::EmptyLandscape, "no Q-values to weight");
  if (q.size() != mu.size()) {
    throw Error(ErrorCode::ShapeMismatch, "q and measure differ in length");
  }
  validate(spec);
  const ScaledWeights sw = activation_weights(spec, q);

  long double num = 0.0L, den = 0.0L, den_sq = 0.0L;
  double lo = q[0], hi = q[0];
  for (std::size_t i = 0; i < q.size(); ++i) {
    const long double c = static_cast<long double>(sw.w[i]) * mu[i];
    num += c * q[i];
    den += c;
    den_sq += c * c;
    lo = std::min(lo, q[i]);
    hi = std::max(hi, q[i]);
  }
  if (!(den > 0.0L)) {
    throw Error(ErrorCode::ZeroNormalizer, "activation weights sum to zero");
  }
  // Rounding can push a convex combination a few ulps outside its hull.
  const double value = std::clamp(static_cast<double>(num / den), lo, hi);

  long double var = 0.0L;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const long double c = static_cast<long double>(sw.w[i]) * mu[i] / den;
    const long double d = q[i] - value;
    var += c * c * d * d;
  }
  return {value, static_cast<double>(std::sqrt(var)), static_cast<double>(den * den / den_sq)};
}

std::vector<double> range_grid(double q_bound) {
  std::vector<double> grid(kQRangeGrid);
  const double lo = -q_bound;
  const double step = 2.0 * q_bound / (kQRangeGrid - 1);
  for (int i = 0; i < kQRangeGrid; ++i) grid[i] = (i == kQRangeGrid - 1) ? q_bound : lo + step * i;
  return grid;
}

bool feasible_at(const ActivationSpec& spec, double beta, double x) {
  const double lg = log_eval(spec, x);
  const double lin = beta * x;
  return lg >= lin - 1e-12 * std::max(1.0, std::abs(lin));
}

}  // namespace

double ga_weighted(std::span<const double> q, std::span<const double> mu,
                   const ActivationSpec& spec) {
  return weighted_mean(q, mu, spec).value;
}

double ga_discrete(const QLandscape& landscape, const ActivationSpec& spec) {
  landscape.validate();
  return weighted_mean(landscape.q, landscape.measure, spec).value;
}

double log_sum_g(const QLandscape& landscape, const ActivationSpec& spec, double beta) {
  landscape.validate();
  validate(spec);
  require_positive(beta, "beta");
  const ScaledWeights sw = activation_weights(spec, landscape.q);
  long double s = 0.0L;
  for (std::size_t i = 0; i < sw.w.size(); ++i) s += static_cast<long double>(sw.w[i]) * landscape.measure[i];
  if (!(s > 0.0L)) throw Error(ErrorCode::ZeroNormalizer, "activation weights sum to zero");
  return (sw.log_scale + static_cast<double>(std::log(s))) / beta;
}

double SpecialCaseOperators::softmax_at(double beta) const {
  return ga_discrete(landscape, ActivationSpec::exponential(beta, 0.0));
}

SpecialCaseOperators special_case_operators(const QLandscape& landscape) {
  landscape.validate();
  return {landscape.max_q(), landscape.mean_q(), landscape};
}

void GaussianProposal::validate() const {
  if (!(std > 0.0) || !std::isfinite(std)) {
    throw Error(ErrorCode::DegenerateProposal, "proposal std must be positive");
  }
  if (!(clip > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise clip must be positive");
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "noise count must be >= 1");
  if (mean_action.empty()) throw Error(ErrorCode::InvalidArgument, "mean action is empty");
  if ((!action_low.empty() && action_low.size() != mean_action.size()) ||
      (!action_high.empty() && action_high.size() != mean_action.size())) {
    throw Error(ErrorCode::ShapeMismatch, "action box does not match action dimension");
  }
}

std::vector<double> NoiseBlock::inverse_density_weights() const {
  std::vector<double> out(log_density.size());
  if (out.empty()) return out;
  const double lo = *std::min_element(log_density.begin(), log_density.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::exp(lo - log_density[j]);
  return out;
}

double truncated_gaussian_log_density(std::span<const double> eps, double std, double clip) {
  const double mass = std::erf(clip / (std * std::numbers::sqrt2));
  const double log_norm = std::log(std * std::sqrt(2.0 * std::numbers::pi) * mass);
  double lp = 0.0;
  for (double e : eps) {
    if (std::abs(e) > clip) return kNegInf;
    lp += -0.5 * (e / std) * (e / std) - log_norm;
  }
  return lp;
}

NoiseBlock draw_truncated_noise(int count, int dim, double std, double clip, Rng& rng) {
  if (!(std > 0.0)) throw Error(ErrorCode::DegenerateProposal, "noise std must be positive");
  if (!(clip > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise clip must be positive");
  if (std::erf(clip / (std * std::numbers::sqrt2)) < 1e-6) {
    throw Error(ErrorCode::DegenerateProposal, "clip is too narrow for rejection sampling");
  }
  NoiseBlock block;
  block.count = count;
  block.dim = dim;
  block.noise.resize(static_cast<std::size_t>(count) * dim);
  block.log_density.resize(count);
  std::normal_distribution<double> normal(0.0, std);
  for (double& e : block.noise) {
    do {
      e = normal(rng);
    } while (std::abs(e) > clip);
  }
  for (int j = 0; j < count; ++j) {
    block.log_density[j] = truncated_gaussian_log_density(block.row(j), std, clip);
  }
  return block;
}

std::vector<double> perturb_action(std::span<const double> mean, std::span<const double> eps,
                                   std::span<const double> low, std::span<const double> high) {
  std::vector<double> a(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) {
    double v = mean[d] + eps[d];
    if (!low.empty()) v = std::max(v, low[d]);
    if (!high.empty()) v = std::min(v, high[d]);
    a[d] = v;
  }
  return a;
}

IsEstimate ga_importance_sampled(std::span<const double> q_values, const NoiseBlock& noise,
                                 const ActivationSpec& spec) {
  if (static_cast<int>(q_values.size()) != noise.count) {
    throw Error(ErrorCode::ShapeMismatch, "one critic value per noise sample is required");
  }
  const std::vector<double> mu = noise.inverse_density_weights();
  return weighted_mean(q_values, mu, spec);
}

IsEstimate ga_importance_sampled_detail(const CriticFn& critic, const GaussianProposal& proposal,
                                        const ActivationSpec& spec, std::uint64_t rng_seed) {
  proposal.validate();
  Rng rng(rng_seed);
  const int dim = static_cast<int>(proposal.mean_action.size());
  const NoiseBlock noise = draw_truncated_noise(proposal.count, dim, proposal.std, proposal.clip, rng);
  std::vector<double> q(proposal.count);
  for (int j = 0; j < proposal.count; ++j) {
    const auto a = perturb_action(proposal.mean_action, noise.row(j), proposal.action_low,
                                  proposal.action_high);
    q[j] = critic(a);
    if (!std::isfinite(q[j])) {
      throw Error(ErrorCode::NonFiniteInput, "critic returned a non-finite value");
    }
  }
  return ga_importance_sampled(q, noise, spec);
}

double ga_importance_sampled(const CriticFn& critic, const GaussianProposal& proposal,
                             const ActivationSpec& spec, std::uint64_t rng_seed) {
  return ga_importance_sampled_detail(critic, proposal, spec, rng_seed).value;
}

bool beta_feasible(const ActivationSpec& spec, double beta, double q_bound,
                   std::span<const double> extra_points) {
  require_positive(beta, "beta");
  // Endpoints and supplied points first; infeasible betas usually fail there.
  if (!feasible_at(spec, beta, -q_bound) || !feasible_at(spec, beta, q_bound)) return false;
  for (double x : extra_points) {
    if (!feasible_at(spec, beta, x)) return false;
  }
  for (double x : range_grid(q_bound)) {
    if (!feasible_at(spec, beta, x)) return false;
  }
  return true;
}

double t_star(const ActivationSpec& spec, double beta, double q_bound,
              std::span<const double> extra_points) {
  require_positive(beta, "beta");
  double best = kNegInf;
  auto visit = [&](double x) { best = std::max(best, log_eval(spec, x) / beta - x); };
  for (double x : range_grid(q_bound)) visit(x);
  for (double x : extra_points) visit(x);
  return best;
}

std::optional<double> find_feasible_beta(const ActivationSpec& spec, double q_bound,
                                         std::span<const double> extra_points) {
  constexpr int kPerDecade = 8;
  for (int i = 7 * kPerDecade; i >= 0; --i) {
    const double beta = std::pow(10.0, -4.0 + static_cast<double>(i) / kPerDecade);
    if (beta_feasible(spec, beta, q_bound, extra_points)) return beta;
  }
  return std::nullopt;
}

Theorem1Report theorem1_bound(const QLandscape& landscape, const ActivationSpec& spec,
                              const BoundParams& params) {
  landscape.validate();
  validate(spec);
  require_positive(params.epsilon, "epsilon");
  require_positive(params.beta, "beta");

  const double qmax = landscape.max_q();
  double q_bound = 0.0;
  if (params.q_bound) {
    q_bound = *params.q_bound;
  } else {
    for (double v : landscape.q) q_bound = std::max(q_bound, std::abs(v));
  }

  std::vector<double> extra = landscape.q;
  extra.push_back(qmax - params.epsilon);
  if (!beta_feasible(spec, params.beta, q_bound, extra)) {
    throw Error(ErrorCode::InfeasibleBeta, "g(q) >= exp(beta q) fails for beta=" +
                                               std::to_string(params.beta) + " with " +
                                               spec.describe());
  }

  Theorem1Report r;
  r.distance = qmax - ga_discrete(landscape, spec);
  long double F = 0.0L;
  for (std::size_t i = 0; i < landscape.size(); ++i) {
    if (landscape.q[i] >= qmax - params.epsilon) F += landscape.measure[i];
  }
  r.F = static_cast<double>(F);
  r.T_star = t_star(spec, params.beta, q_bound, extra);
  const double lnF = std::log(r.F);
  r.bound_M = params.epsilon + (landscape.action_volume - 1.0 + lnF) / params.beta + r.T_star;
  r.bound_M_proof = params.epsilon + (landscape.action_volume - 1.0 - lnF) / params.beta + r.T_star;
  r.ok = r.distance >= 0.0 && r.distance <= r.bound_M + 1e-12 * (1.0 + std::abs(r.bound_M));
  return r;
}

}  // namespace galab
