#include "galab/error.hpp"

namespace galab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptyLandscape: return "EmptyLandscape";
    case ErrorCode::ZeroNormalizer: return "ZeroNormalizer";
    case ErrorCode::DegenerateProposal: return "DegenerateProposal";
    case ErrorCode::InfeasibleBeta: return "InfeasibleBeta";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::ArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::NonFiniteAction: return "NonFiniteAction";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownSuite: return "UnknownSuite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace galab
