#include "galab/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "galab/error.hpp"

namespace galab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_integer(double v) { return std::floor(v) == v; }

void require_finite(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "activation input is not finite");
}

// log(exp(a) + exp(b))
double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

std::string_view family_name(ActivationFamily family) {
  switch (family) {
    case ActivationFamily::Polynomial: return "poly";
    case ActivationFamily::Tanh: return "tanh";
    case ActivationFamily::Exponential: return "exp";
    case ActivationFamily::Linear: return "linear";
    case ActivationFamily::Constant: return "constant";
  }
  return "unknown";
}

ActivationFamily parse_family(std::string_view name) {
  if (name == "poly" || name == "polynomial") return ActivationFamily::Polynomial;
  if (name == "tanh") return ActivationFamily::Tanh;
  if (name == "exp" || name == "exponential") return ActivationFamily::Exponential;
  if (name == "linear") return ActivationFamily::Linear;
  if (name == "constant") return ActivationFamily::Constant;
  throw Error(ErrorCode::ConfigError, "unknown activation family '" + std::string(name) + "'");
}

ActivationSpec ActivationSpec::polynomial(double alpha, double k, double bias) {
  return {ActivationFamily::Polynomial, alpha, k, 0.0, bias, 0.0};
}
ActivationSpec ActivationSpec::tanh(double beta, double bias) {
  return {ActivationFamily::Tanh, 0.0, 0.0, beta, bias, 0.0};
}
ActivationSpec ActivationSpec::exponential(double beta, double bias) {
  return {ActivationFamily::Exponential, 0.0, 0.0, beta, bias, 0.0};
}
ActivationSpec ActivationSpec::exponential_base(double base, double rate, double bias) {
  return {ActivationFamily::Exponential, 0.0, base, rate, bias, 0.0};
}
ActivationSpec ActivationSpec::linear(double alpha, double bias) {
  return {ActivationFamily::Linear, alpha, 0.0, 0.0, bias, 0.0};
}
ActivationSpec ActivationSpec::constant(double bias) {
  return {ActivationFamily::Constant, 0.0, 0.0, 0.0, bias, 0.0};
}

ActivationSpec ActivationSpec::with_bias(double b) const {
  ActivationSpec out = *this;
  out.bias = b;
  return out;
}

double ActivationSpec::exponential_rate() const {
  return k > 0.0 ? beta * std::log(k) : beta;
}

std::string ActivationSpec::describe() const {
  std::ostringstream os;
  os << family_name(family) << "(alpha=" << alpha << ", k=" << k << ", beta=" << beta
     << ", bias=" << bias;
  if (shift != 0.0) os << ", shift=" << shift;
  os << ")";
  return os.str();
}

void validate(const ActivationSpec& s) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::DomainError, s.describe() + ": " + why);
  };
  for (double v : {s.alpha, s.k, s.beta, s.bias, s.shift}) {
    if (!std::isfinite(v)) fail("parameters must be finite");
  }
  if (s.bias < 0.0) fail("bias must be >= 0");
  switch (s.family) {
    case ActivationFamily::Polynomial:
      if (!(s.alpha > 0.0)) fail("polynomial alpha must be > 0");
      if (!(s.k > 0.0)) fail("polynomial k must be > 0");
      break;
    case ActivationFamily::Tanh:
      if (!(s.beta > 0.0)) fail("tanh beta must be > 0");
      break;
    case ActivationFamily::Exponential:
      if (!(s.beta > 0.0)) fail("exponential beta must be > 0");
      if (s.k != 0.0 && s.k < 1.0) fail("exponential base k must be >= 1 (or 0 for e)");
      break;
    case ActivationFamily::Linear:
      if (s.alpha < 0.0) fail("linear alpha must be >= 0");
      break;
    case ActivationFamily::Constant:
      if (!(s.bias > 0.0)) fail("constant activation needs bias > 0");
      break;
  }
}

double eval(const ActivationSpec& s, double x) {
  require_finite(x);
  const double u = x + s.shift;
  double core = 0.0;
  switch (s.family) {
    case ActivationFamily::Polynomial:
      if (u < 0.0 && !is_integer(s.k)) {
        throw Error(ErrorCode::DomainError,
                    "negative base for fractional polynomial index; shift the input");
      }
      core = s.alpha * std::pow(u, s.k);
      break;
    case ActivationFamily::Tanh:
      core = std::tanh(s.beta * u);
      break;
    case ActivationFamily::Exponential:
      core = std::exp(s.exponential_rate() * u);
      break;
    case ActivationFamily::Linear:
      core = s.alpha * u;
      break;
    case ActivationFamily::Constant:
      core = 0.0;
      break;
  }
  return core + s.bias;
}

double log_eval(const ActivationSpec& s, double x) {
  require_finite(x);
  if (s.family == ActivationFamily::Exponential) {
    const double lin = s.exponential_rate() * (x + s.shift);
    return s.bias > 0.0 ? log_add_exp(lin, std::log(s.bias)) : lin;
  }
  const double g = eval(s, x);
  return g > 0.0 ? std::log(g) : kNegInf;
}

ActivationSpec with_domain_shift(const ActivationSpec& spec, double q_bound) {
  const bool needs_base = spec.family == ActivationFamily::Polynomial ||
                          spec.family == ActivationFamily::Linear;
  if (!needs_base || spec.shift != 0.0) return spec;
  ActivationSpec out = spec;
  out.shift = std::abs(q_bound) + 1.0;
  return out;
}

ScaledWeights activation_weights(const ActivationSpec& s, std::span<const double> q) {
  ScaledWeights out;
  out.w.resize(q.size());
  if (q.empty()) return out;

  if (s.family == ActivationFamily::Exponential) {
    double hi = kNegInf;
    for (std::size_t i = 0; i < q.size(); ++i) {
      out.w[i] = log_eval(s, q[i]);
      hi = std::max(hi, out.w[i]);
    }
    out.log_scale = hi;
    for (double& w : out.w) w = std::exp(w - hi);
    return out;
  }

  double hi = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double g = eval(s, q[i]);
    if (g < 0.0) {
      throw Error(ErrorCode::DomainError,
                  s.describe() + " produced a negative weight at q=" + std::to_string(q[i]));
    }
    if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteInput, "activation weight overflowed");
    out.w[i] = g;
    hi = std::max(hi, g);
  }
  if (hi == 0.0) {
    out.log_scale = kNegInf;
    return out;
  }
  out.log_scale = std::log(hi);
  for (double& w : out.w) w /= hi;
  return out;
}

bool validate_nondecreasing(const ActivationSpec& s, double lo, double hi, int grid_points) {
  if (!(lo < hi) || grid_points < 2) {
    throw Error(ErrorCode::InvalidArgument, "need lo < hi and at least 2 grid points");
  }
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  const bool use_log = s.family == ActivationFamily::Exponential;
  double prev = use_log ? log_eval(s, lo) : eval(s, lo);
  for (int i = 1; i < grid_points; ++i) {
    const double x = (i == grid_points - 1) ? hi : lo + step * i;
    const double cur = use_log ? log_eval(s, x) : eval(s, x);
    if (cur < prev) return false;
    prev = cur;
  }
  return true;
}

bool check_condition1(const ActivationSpec& s, const QLandscape& landscape) {
  if (landscape.q.empty()) throw Error(ErrorCode::EmptyLandscape, "landscape has no entries");
  const auto& q = landscape.q;
  const auto& mu = landscape.measure;
  const std::size_t n = q.size();

  std::vector<double> g(n);
  if (s.family == ActivationFamily::Exponential) {
    g = activation_weights(s, q).w;
  } else {
    for (std::size_t i = 0; i < n; ++i) g[i] = eval(s, q[i]);
  }
  for (double v : g) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "activation weight not finite");
  }

  long double acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      acc += static_cast<long double>(mu[i]) * mu[j] * (g[i] - g[j]) * (q[i] - q[j]);
    }
  }
  return acc >= 0.0L;
}

}  // namespace galab
