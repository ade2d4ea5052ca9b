#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "galab/activation.hpp"
#include "galab/landscape.hpp"

namespace galab {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Discrete operator
// ---------------------------------------------------------------------------

/// sum_i g(q_i) q_i mu_i / sum_j g(q_j) mu_j, the generalized-activated
/// weighting operator over a finite measure. Result lies in [min q, max q].
/// Throws ZeroNormalizer if every weight is zero.
double ga_weighted(std::span<const double> q, std::span<const double> mu,
                   const ActivationSpec& spec);

double ga_discrete(const QLandscape& landscape, const ActivationSpec& spec);

/// (1/beta) ln sum_i g(q_i) mu_i.
double log_sum_g(const QLandscape& landscape, const ActivationSpec& spec, double beta);

/// Max, measure-weighted mean, and softmax (= GA with exp(beta q)) views of
/// the same landscape.
struct SpecialCaseOperators {
  double max = 0.0;
  double mean = 0.0;
  QLandscape landscape;

  double softmax_at(double beta) const;
};
SpecialCaseOperators special_case_operators(const QLandscape& landscape);

// ---------------------------------------------------------------------------
// Importance-sampled estimator over a truncated Gaussian proposal
// ---------------------------------------------------------------------------

/// Noise eps ~ N(0, std^2) restricted to [-clip, clip] per coordinate,
/// centred on `mean_action`; perturbed actions are clipped to the action box.
/// Defaults follow the published hyperparameters (50 noises, 0.2, 0.5).
struct GaussianProposal {
  std::vector<double> mean_action;
  double std = 0.2;
  double clip = 0.5;
  int count = 50;
  std::vector<double> action_low;   // empty = unbounded
  std::vector<double> action_high;  // empty = unbounded

  void validate() const;
};

/// `count` noise vectors of dimension `dim`, row-major, with the log-density of
/// each vector under the renormalized truncated Gaussian.
struct NoiseBlock {
  int count = 0;
  int dim = 0;
  std::vector<double> noise;
  std::vector<double> log_density;

  std::span<const double> row(int j) const {
    return {noise.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)};
  }
  /// Importance weights 1/p_j rescaled so the largest is 1.
  std::vector<double> inverse_density_weights() const;
};

/// Rejection-samples from the truncated normal; the sampling law then matches
/// the density used in the importance weights exactly.
NoiseBlock draw_truncated_noise(int count, int dim, double std, double clip, Rng& rng);

/// log density of the per-coordinate truncated normal product at `eps`.
double truncated_gaussian_log_density(std::span<const double> eps, double std, double clip);

struct IsEstimate {
  double value = 0.0;
  double std_error = 0.0;  // delta-method standard error of the ratio estimator
  double effective_n = 0.0;
};

/// Ratio estimator E[g(Q)Q/p] / E[g(Q)/p] from critic values already
/// evaluated at the perturbed actions of `noise`.
IsEstimate ga_importance_sampled(std::span<const double> q_values, const NoiseBlock& noise,
                                 const ActivationSpec& spec);

using CriticFn = std::function<double(std::span<const double>)>;

IsEstimate ga_importance_sampled_detail(const CriticFn& critic, const GaussianProposal& proposal,
                                        const ActivationSpec& spec, std::uint64_t rng_seed);

/// Deterministic given `rng_seed`.
double ga_importance_sampled(const CriticFn& critic, const GaussianProposal& proposal,
                             const ActivationSpec& spec, std::uint64_t rng_seed);

/// mean + eps clipped into [low, high] (empty bounds leave coordinates free).
std::vector<double> perturb_action(std::span<const double> mean, std::span<const double> eps,
                                   std::span<const double> low, std::span<const double> high);

// ---------------------------------------------------------------------------
// Distance-to-max bound
// ---------------------------------------------------------------------------

/// epsilon and beta of the bound. `q_bound` is the half-width of the Q-range
/// used for the feasibility check and for T*; when unset it is max |q| of the
/// landscape being bounded.
struct BoundParams {
  double epsilon = 0.1;
  double beta = 1.0;
  std::optional<double> q_bound;
};

struct Theorem1Report {
  double distance = 0.0;       // max q - GA
  double bound_M = 0.0;        // eps + (vol - 1 + ln F)/beta + T*
  double bound_M_proof = 0.0;  // eps + (vol - 1 - ln F)/beta + T*
  double F = 0.0;              // measure of {i : q_i >= max q - eps}
  double T_star = 0.0;
  bool ok = false;             // 0 <= distance <= bound_M
};

/// Number of grid points used when scanning the Q-range.
inline constexpr int kQRangeGrid = 10000;

/// g(q) >= exp(beta q) on the uniform grid over [-q_bound, q_bound] and at
/// every extra point supplied.
bool beta_feasible(const ActivationSpec& spec, double beta, double q_bound,
                   std::span<const double> extra_points = {});

/// max over the same grid (plus extra points) of (1/beta) ln g(q) - q.
double t_star(const ActivationSpec& spec, double beta, double q_bound,
              std::span<const double> extra_points = {});

/// Largest beta on a log-spaced scan of [1e-4, 1e3] that passes beta_feasible,
/// or nullopt when none does.
std::optional<double> find_feasible_beta(const ActivationSpec& spec, double q_bound,
                                         std::span<const double> extra_points = {});

/// Throws InfeasibleBeta when params.beta fails the feasibility check.
Theorem1Report theorem1_bound(const QLandscape& landscape, const ActivationSpec& spec,
                              const BoundParams& params);

}  // namespace galab
