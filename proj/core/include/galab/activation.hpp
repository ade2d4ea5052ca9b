#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "galab/landscape.hpp"

namespace galab {

enum class ActivationFamily { Polynomial, Tanh, Exponential, Linear, Constant };

/// Config spelling: "poly", "tanh", "exp", "linear", "constant".
std::string_view family_name(ActivationFamily family);
ActivationFamily parse_family(std::string_view name);

/// Non-decreasing weight function g(x; alpha, k, beta, bias) applied to
/// Q-values. Family formulas, with u = x + shift:
///
///   Polynomial   alpha * u^k + bias
///   Tanh         tanh(beta * u) + bias
///   Exponential  exp(beta * ln(k) * u) + bias   (k == 0 means base e)
///   Linear       alpha * u + bias
///   Constant     bias
///
/// `shift` is an input translation. It stays 0 unless a caller that knows the
/// Q-range asks for one via with_domain_shift().
struct ActivationSpec {
  ActivationFamily family = ActivationFamily::Constant;
  double alpha = 0.0;
  double k = 0.0;
  double beta = 0.0;
  double bias = 0.0;
  double shift = 0.0;

  static ActivationSpec polynomial(double alpha, double k, double bias);
  static ActivationSpec tanh(double beta, double bias);
  static ActivationSpec exponential(double beta, double bias);
  /// base^(rate * x) + bias, the base-k exponential family.
  static ActivationSpec exponential_base(double base, double rate, double bias);
  static ActivationSpec linear(double alpha, double bias);
  static ActivationSpec constant(double bias);

  /// Same spec with a different bias term.
  ActivationSpec with_bias(double b) const;

  /// exp-family rate, beta * ln(k), or beta when k is unset.
  double exponential_rate() const;

  std::string describe() const;
};

/// Throws DomainError when the family's parameter constraints are violated.
void validate(const ActivationSpec& spec);

/// g(x). NonFiniteInput for NaN/inf x, DomainError for a negative base with a
/// fractional polynomial index. Parameter invariants are not checked here.
double eval(const ActivationSpec& spec, double x);

/// ln g(x), computed without overflow for the exponential family.
/// Returns -inf where g(x) <= 0.
double log_eval(const ActivationSpec& spec, double x);

/// Polynomial and linear weights need a positive base over the whole Q-range.
/// For those families (when no shift is set) this returns a copy shifted by
/// q_bound + 1; other specs come back unchanged.
ActivationSpec with_domain_shift(const ActivationSpec& spec, double q_bound);

/// Weights g(q_i) represented as w_i * exp(log_scale) with max w_i == 1.
/// Throws DomainError if any weight is negative.
struct ScaledWeights {
  std::vector<double> w;
  double log_scale = 0.0;
};
ScaledWeights activation_weights(const ActivationSpec& spec, std::span<const double> q);

/// Uniform-grid check that g never decreases on [lo, hi].
bool validate_nondecreasing(const ActivationSpec& spec, double lo, double hi, int grid_points);

/// Discrete form of the Chebyshev-type weighting condition:
///   (sum g_i q_i mu_i)(sum mu_j) >= (sum g_i mu_i)(sum q_j mu_j).
/// Evaluated through the equivalent pairwise sum
///   sum_{i<j} mu_i mu_j (g_i - g_j)(q_i - q_j) >= 0,
/// which is exact in sign for monotone g and exact in equality for constant q.
bool check_condition1(const ActivationSpec& spec, const QLandscape& landscape);

}  // namespace galab
