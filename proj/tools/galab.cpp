// galab: run experiments and randomized diagnostic suites.
//
//   galab run --config configs/pendulum_gd3.toml [--seeds 5] [--out runs/x]
//   galab diagnose operator [--trials 1000] [--seed 0] [--out diagnostics]
//   galab diagnose all
//
// Exit status is 0 only when everything invoked succeeded.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "galab/config.hpp"
#include "galab/error.hpp"
#include "galab/experiment.hpp"
#include "galab/suites.hpp"

namespace {

int cmd_run(const std::string& config_path, int seeds, const std::string& out, unsigned jobs, bool quiet) {
  galab::ExperimentConfig cfg = galab::load_experiment_config(config_path);
  if (seeds > 0) {
    cfg.seeds.resize(static_cast<std::size_t>(seeds));
    std::iota(cfg.seeds.begin(), cfg.seeds.end(), std::uint64_t{0});
  }
  if (!out.empty()) cfg.out = out;
  galab::RunOptions opts;
  opts.jobs = jobs;
  opts.log = quiet ? nullptr : &std::cerr;
  const galab::ExperimentResult r = galab::run_experiment(cfg, opts);
  std::cout << r.dir << '\n';
  return 0;
}

int cmd_diagnose(const std::string& suite, long trials, std::uint64_t seed, const std::string& out, bool quiet) {
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = galab::suite_names();
  } else {
    suites.push_back(suite);
  }
  galab::DiagnosticOptions opts;
  opts.trials = trials;
  opts.seed = seed;
  opts.out = out;
  opts.log = quiet ? nullptr : &std::cerr;
  bool all_passed = true;
  for (const auto& s : suites) {
    const galab::SuiteReport rep = galab::run_diagnostics(s, opts);
    std::cout << (rep.passed ? "PASS " : "FAIL ") << rep.suite << " cases=" << rep.cases
              << " failures=" << rep.failures << " metric=" << rep.metric << " dir=" << rep.dir << '\n';
    all_passed = all_passed && rep.passed;
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized-activated weighting operator laboratory"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  auto* run = app.add_subcommand("run", "Train agents as described by a config file");
  std::string config_path, run_out;
  int seeds = 0;
  unsigned jobs = 0;
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Use seeds 0..N-1 instead of the config's list")->check(CLI::PositiveNumber);
  run->add_option("--out", run_out, "Output directory (a -N suffix is added if it exists)");
  run->add_option("--jobs", jobs, "Seeds trained concurrently (default: hardware threads)");

  auto* diag = app.add_subcommand("diagnose", "Run a randomized verification suite");
  std::string suite, diag_out = "diagnostics";
  long trials = 0;
  std::uint64_t seed = 0;
  diag->add_option("suite", suite, "operator | value-iteration | bias-ordering | gradcheck | all")->required();
  diag->add_option("--trials", trials, "Suite-specific trial count (default: suite default)");
  diag->add_option("--seed", seed, "Random seed");
  diag->add_option("--out", diag_out, "Parent output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, seeds, run_out, jobs, quiet);
    if (*diag) return cmd_diagnose(suite, trials, seed, diag_out, quiet);
  } catch (const galab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::cout << "{\"error\":\"" << galab::to_string(e.code()) << "\"}\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
