#include "galab/suites.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <random>
#include <sstream>

#include "galab/activation.hpp"
#include "galab/diagnostics.hpp"
#include "galab/error.hpp"
#include "galab/experiment.hpp"
#include "galab/ga_operator.hpp"
#include "galab/report.hpp"
#include "galab/tabular_vi.hpp"
#include "galab/tinynet.hpp"

namespace galab {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

template <class T>
T pick(std::mt19937_64& rng, std::initializer_list<T> items) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return *(items.begin() + d(rng));
}

/// A valid activation drawn from the families and parameter grids the
/// experiments use. Tanh biases stay >= 1 so weights are non-negative.
ActivationSpec random_activation(std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0:
      return ActivationSpec::polynomial(pick(rng, {0.01, 0.05, 0.1, 0.5}), pick(rng, {1.0, 2.0, 3.0}),
                                        pick(rng, {0.0, 1.0, 2.0, 5.0}));
    case 1:
      return ActivationSpec::tanh(pick(rng, {0.005, 0.05, 0.1, 1.0}), pick(rng, {1.0, 2.0, 5.0}));
    case 2:
      return ActivationSpec::exponential(pick(rng, {0.1, 0.5, 1.0, 2.0, 10.0}), pick(rng, {0.0, 1.0, 2.0, 5.0}));
    case 3:
      return ActivationSpec::linear(pick(rng, {0.1, 0.5, 1.0, 2.0}), pick(rng, {0.0, 1.0, 2.0, 5.0}));
    default:
      return ActivationSpec::constant(pick(rng, {1.0, 2.0, 5.0}));
  }
}

void log_line(const DiagnosticOptions& o, const std::string& s) {
  if (o.log) *o.log << s << '\n';
}

// ---------------------------------------------------------------------------

SuiteReport operator_suite(const DiagnosticOptions& o, const std::string& dir) {
  const long trials = o.trials > 0 ? o.trials : 1000;
  constexpr double kQ = 5.0;
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> size(1, 32);
  std::uniform_real_distribution<double> q_dist(-kQ, kQ), eps_dist(0.05, 1.0), frac(0.1, 1.0);

  CsvWriter csv((fs::path(dir) / "operator.csv").string(),
                {"trial", "family", "alpha", "k", "beta", "bias", "epsilon", "distance", "bound_M", "ok"});
  CsvWriter detail((fs::path(dir) / "operator_detail.csv").string(),
                   {"trial", "family", "alpha", "k", "activation_beta", "bias", "shift", "actions", "F",
                    "T_star", "bound_M_proof", "ok_proof"});
  SuiteReport rep;
  long rejected = 0, proof_failures = 0;
  double worst = 0.0;
  for (long t = 0; t < trials;) {
    const int n = size(rng);
    std::vector<double> q(static_cast<std::size_t>(n));
    for (auto& v : q) v = q_dist(rng);
    const QLandscape land = QLandscape::uniform(q);
    const ActivationSpec spec = with_domain_shift(random_activation(rng), kQ);
    BoundParams params;
    params.epsilon = eps_dist(rng);
    params.q_bound = kQ;
    std::vector<double> extra = q;
    extra.push_back(land.max_q() - params.epsilon);
    const auto beta_max = find_feasible_beta(spec, kQ, extra);
    if (!beta_max) {
      ++rejected;
      continue;
    }
    params.beta = *beta_max * frac(rng);
    if (!beta_feasible(spec, params.beta, kQ, extra)) params.beta = *beta_max;
    const Theorem1Report r = theorem1_bound(land, spec, params);
    ++t;
    ++rep.cases;
    if (!r.ok) ++rep.failures;
    const bool ok_proof = r.distance >= 0.0 && r.distance <= r.bound_M_proof + 1e-12 * (1.0 + std::abs(r.bound_M_proof));
    if (!ok_proof) ++proof_failures;
    if (r.bound_M > 0.0) worst = std::max(worst, r.distance / r.bound_M);
    const std::string fam(family_name(spec.family));
    csv.cell(static_cast<double>(t)).cell(fam).cell(spec.alpha).cell(spec.k).cell(params.beta).cell(spec.bias);
    csv.cell(params.epsilon).cell(r.distance).cell(r.bound_M).cell(r.ok);
    csv.end_row();
    detail.cell(static_cast<double>(t)).cell(fam).cell(spec.alpha).cell(spec.k).cell(spec.beta).cell(spec.bias);
    detail.cell(spec.shift).cell(static_cast<double>(n)).cell(r.F).cell(r.T_star).cell(r.bound_M_proof).cell(ok_proof);
    detail.end_row();
  }
  csv.close();
  detail.close();
  rep.passed = rep.failures == 0;
  rep.metric = worst;
  Json j;
  j["rejected_infeasible_draws"] = rejected;
  j["proof_form_failures"] = proof_failures;
  j["max_distance_over_bound"] = worst;
  rep.summary_json = j.dump();
  return rep;
}

// ---------------------------------------------------------------------------

SuiteReport value_iteration_suite(const DiagnosticOptions& o, const std::string& dir) {
  const long mdps = o.trials > 0 ? o.trials : 20;
  constexpr int kIters = 200;
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> ns(2, 8), na(2, 4);
  SuiteReport rep;
  long rejected = 0;
  double worst = 0.0;
  Json per_mdp = Json::array();
  for (long m = 0; m < mdps;) {
    const TabularMdp mdp = TabularMdp::random(ns(rng), na(rng), 0.9, 1.0, rng());
    const ActivationSpec spec = random_activation(rng);
    const ActivationSpec eff = effective_spec(mdp, spec);
    const auto beta = find_feasible_beta(eff, mdp.q_bound());
    if (!beta) {
      ++rejected;
      continue;
    }
    const ValueTrace trace = value_iterate_ga(mdp, spec, kIters);
    BoundParams params;
    params.beta = *beta;
    params.epsilon = default_epsilon(mdp, trace.v_star);
    const Theorem2Report r = theorem2_bound_report(trace, mdp, spec, params);

    CsvWriter csv((fs::path(dir) / ("mdp_" + std::to_string(m) + ".csv")).string(), {"t", "gap", "bound", "ok"});
    for (std::size_t t = 0; t < r.lhs.size(); ++t) {
      const bool ok = r.lhs[t] <= r.rhs[t];
      if (r.rhs[t] > 0.0) worst = std::max(worst, r.lhs[t] / r.rhs[t]);
      csv.cell(static_cast<double>(t)).cell(r.lhs[t]).cell(r.rhs[t]).cell(ok);
      csv.end_row();
    }
    csv.close();
    ++rep.cases;
    if (!r.ok) ++rep.failures;
    per_mdp.push_back({{"mdp", m},
                       {"states", mdp.n_states},
                       {"actions", mdp.n_actions},
                       {"activation", spec.describe()},
                       {"beta", *beta},
                       {"epsilon", params.epsilon},
                       {"final_gap", r.lhs.back()},
                       {"limit", r.limit},
                       {"ok", r.ok}});
    ++m;
  }
  rep.passed = rep.failures == 0;
  rep.metric = worst;
  Json j;
  j["iterations"] = kIters;
  j["rejected_infeasible_draws"] = rejected;
  j["max_lhs_over_rhs"] = worst;
  j["mdps"] = per_mdp;
  rep.summary_json = j.dump();
  return rep;
}

// ---------------------------------------------------------------------------

SuiteReport bias_ordering_suite(const DiagnosticOptions& o, const std::string& dir) {
  const long trials = o.trials > 0 ? o.trials : 100'000;
  constexpr int kLandscapes = 20;
  constexpr int kActions = 16;
  const double etas[] = {0.25, 0.5, 1.0};
  const ActivationSpec spec = ActivationSpec::polynomial(0.05, 2.0, 2.0);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  CsvWriter csv((fs::path(dir) / "bias-ordering.csv").string(),
                {"landscape", "eta", "estimator", "bias", "stderr", "orderings_ok"});
  SuiteReport rep;
  for (int l = 0; l < kLandscapes; ++l) {
    NoiseModel model;
    model.true_q.resize(kActions);
    for (auto& q : model.true_q) q = u(rng);
    model.trials = trials;
    for (double eta : etas) {
      model.eta = eta;
      const BiasOrdering r = synthetic_bias_ordering(model, spec, rng());
      ++rep.cases;
      if (!r.orderings_ok) ++rep.failures;
      const std::pair<const char*, std::pair<double, double>> rows[] = {
          {"max_single", {r.bias_max_single, r.se_max_single}},
          {"ga_single", {r.bias_ga_single, r.se_ga_single}},
          {"ga_min_pair", {r.bias_ga_min_pair, r.se_ga_min_pair}}};
      for (const auto& [name, v] : rows) {
        csv.cell(static_cast<double>(l)).cell(eta).cell(name).cell(v.first).cell(v.second).cell(r.orderings_ok);
        csv.end_row();
      }
    }
    log_line(o, "bias-ordering: landscape " + std::to_string(l + 1) + "/" + std::to_string(kLandscapes));
  }
  csv.close();
  const double frac_ok = static_cast<double>(rep.cases - rep.failures) / static_cast<double>(rep.cases);
  rep.metric = frac_ok;
  rep.passed = frac_ok >= 0.95;
  Json j;
  j["trials_per_cell"] = trials;
  j["fraction_ordered"] = frac_ok;
  j["required_fraction"] = 0.95;
  j["activation"] = spec.describe();
  rep.summary_json = j.dump();
  return rep;
}

// ---------------------------------------------------------------------------

// Sign pattern of every hidden pre-activation, recomputed from the weights.
std::vector<bool> relu_pattern(const Mlp& net, const Eigen::VectorXd& x) {
  std::vector<bool> pat;
  Eigen::VectorXd a = x;
  for (int l = 0; l + 1 < net.num_layers(); ++l) {
    const Eigen::VectorXd z = net.weights()[l] * a + net.biases()[l];
    for (Eigen::Index i = 0; i < z.size(); ++i) pat.push_back(z(i) > 0.0);
    a = z.cwiseMax(0.0);
  }
  return pat;
}

struct GradStats {
  double max_rel = 0.0;
  long checked = 0;
  long skipped = 0;
};

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

SuiteReport gradcheck_suite(const DiagnosticOptions& o, const std::string& dir) {
  const long nets = o.trials > 0 ? o.trials : 20;
  constexpr double h = 1e-5;
  constexpr double kTol = 1e-4;
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> in_dim(1, 5), width(2, 16), depth(1, 2), out_dim(1, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);

  CsvWriter csv((fs::path(dir) / "gradcheck.csv").string(),
                {"net", "layers", "output", "kind", "checked", "skipped", "max_rel_error", "ok"});
  SuiteReport rep;
  double worst = 0.0;
  for (long k = 0; k < nets; ++k) {
    std::vector<int> sizes{in_dim(rng)};
    const int d = depth(rng);
    for (int i = 0; i < d; ++i) sizes.push_back(width(rng));
    sizes.push_back(out_dim(rng));
    const bool tanh_out = k % 2 == 1;
    std::vector<double> lo, hi;
    if (tanh_out) {
      lo.assign(static_cast<std::size_t>(sizes.back()), -1.0);
      hi.assign(static_cast<std::size_t>(sizes.back()), 2.0);
    }
    Mlp net(sizes, tanh_out ? OutputActivation::ScaledTanh : OutputActivation::Identity, rng(), lo, hi);
    Eigen::VectorXd x(sizes.front());
    for (auto& v : x) v = u(rng);
    Eigen::VectorXd up(sizes.back());
    for (auto& v : up) v = z(rng);
    auto objective = [&](const Mlp& m, const Eigen::VectorXd& in) { return up.dot(m.forward(in)); };
    const std::vector<bool> base = relu_pattern(net, x);

    GradStats ps;
    const std::vector<double> analytic = net.grad_params(x, up).flatten();
    std::vector<double> flat = net.flatten();
    Mlp probe = net;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double orig = flat[i];
      flat[i] = orig + h;
      probe.unflatten(flat);
      const bool same_plus = relu_pattern(probe, x) == base;
      const double fp = objective(probe, x);
      flat[i] = orig - h;
      probe.unflatten(flat);
      const bool same_minus = relu_pattern(probe, x) == base;
      const double fm = objective(probe, x);
      flat[i] = orig;
      if (!same_plus || !same_minus) {
        ++ps.skipped;
        continue;
      }
      ps.max_rel = std::max(ps.max_rel, rel_error(analytic[i], (fp - fm) / (2.0 * h)));
      ++ps.checked;
    }

    GradStats is;
    const Eigen::VectorXd gin = net.grad_input(x, up);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      if (relu_pattern(net, xp) != base || relu_pattern(net, xm) != base) {
        ++is.skipped;
        continue;
      }
      is.max_rel = std::max(is.max_rel, rel_error(gin(i), (objective(net, xp) - objective(net, xm)) / (2.0 * h)));
      ++is.checked;
    }

    std::string layers;
    for (std::size_t i = 0; i < sizes.size(); ++i) layers += (i ? "-" : "") + std::to_string(sizes[i]);
    const std::string out_kind = tanh_out ? "scaled_tanh" : "identity";
    for (const auto& [kind, st] : {std::pair{"params", ps}, std::pair{"input", is}}) {
      const bool ok = st.max_rel <= kTol;
      csv.cell(static_cast<double>(k)).cell(layers).cell(out_kind).cell(kind);
      csv.cell(static_cast<double>(st.checked)).cell(static_cast<double>(st.skipped)).cell(st.max_rel).cell(ok);
      csv.end_row();
      ++rep.cases;
      if (!ok) ++rep.failures;
      worst = std::max(worst, st.max_rel);
    }
  }
  csv.close();
  rep.passed = rep.failures == 0;
  rep.metric = worst;
  Json j;
  j["step"] = h;
  j["tolerance"] = kTol;
  j["max_rel_error"] = worst;
  rep.summary_json = j.dump();
  return rep;
}

}  // namespace

SuiteReport run_diagnostics(const std::string& suite, const DiagnosticOptions& options) {
  using SuiteFn = SuiteReport (*)(const DiagnosticOptions&, const std::string&);
  SuiteFn fn = nullptr;
  if (suite == "operator") fn = operator_suite;
  else if (suite == "value-iteration") fn = value_iteration_suite;
  else if (suite == "bias-ordering") fn = bias_ordering_suite;
  else if (suite == "gradcheck") fn = gradcheck_suite;
  if (!fn) {
    std::string known;
    for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::UnknownSuite, "unknown suite '" + suite + "' (known: " + known + ")");
  }

  const std::string dir = unique_output_dir((fs::path(options.out) / suite).string());
  fs::create_directories(dir);
  SuiteReport rep = fn(options, dir);
  rep.suite = suite;
  rep.dir = dir;

  Json j = Json::parse(rep.summary_json);
  j["suite"] = suite;
  j["passed"] = rep.passed;
  j["cases"] = rep.cases;
  j["failures"] = rep.failures;
  j["metric"] = rep.metric;
  j["seed"] = options.seed;
  rep.summary_json = j.dump(2);
  std::ofstream os(fs::path(dir) / "summary.json", std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write summary in " + dir);
  os << rep.summary_json << '\n';
  return rep;
}

}  // namespace galab
