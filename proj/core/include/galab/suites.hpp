#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace galab {

/// Randomized verification suites behind `diagnose <suite>`.
inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"operator", "value-iteration", "bias-ordering", "gradcheck"};
  return names;
}

struct DiagnosticOptions {
  /// Suite-specific count; <= 0 selects the suite default
  /// (operator 1000 landscapes, value-iteration 20 MDPs,
  /// bias-ordering 1e5 trials per cell, gradcheck 20 nets).
  long trials = 0;
  std::uint64_t seed = 0;
  /// Parent directory; the suite writes into a fresh subdirectory.
  std::string out = "diagnostics";
  std::ostream* log = nullptr;
};

struct SuiteReport {
  std::string suite;
  std::string dir;
  bool passed = false;
  long cases = 0;
  long failures = 0;
  /// Suite headline number: max distance/bound ratio (operator), max lhs/rhs
  /// ratio (value-iteration), fraction of ordered cells (bias-ordering), max
  /// relative gradient error (gradcheck).
  double metric = 0.0;
  std::string summary_json;
};

/// Runs one suite, writing `<dir>/<suite>.csv` (value-iteration writes one
/// `mdp_<k>.csv` per MDP) and `<dir>/summary.json`. Throws UnknownSuite.
SuiteReport run_diagnostics(const std::string& suite, const DiagnosticOptions& options = {});

}  // namespace galab
