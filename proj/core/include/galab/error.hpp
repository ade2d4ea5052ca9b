#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace galab {

enum class ErrorCode {
  NonFiniteInput,
  DomainError,
  EmptyLandscape,
  ZeroNormalizer,
  DegenerateProposal,
  InfeasibleBeta,
  NonConvergence,
  ShapeMismatch,
  NonFiniteActivation,
  ArchitectureMismatch,
  NonFiniteAction,
  NonFiniteLoss,
  ConfigError,
  UnknownSuite,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's machine-readable summaries) can branch on kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace galab
