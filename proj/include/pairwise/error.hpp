#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pairwise {

enum class ErrorKind {
  kDegeneratePrior,
  kOutOfRange,
  kDimensionMismatch,
  kEmptyData,
  kSingularSystem,
  kMaxIterations,
  kInfeasibleProblem,
  kMissingClass,
  kParseError,
  kEmptyFile,
  kRaggedRows,
  kNonBinaryLabels,
  kInsufficientData,
  kNotBinary,
  kConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (notably the experiment harness) can record it per trial.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegeneratePrior: return "DegeneratePrior";
    case ErrorKind::kOutOfRange: return "OutOfRange";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kEmptyData: return "EmptyData";
    case ErrorKind::kSingularSystem: return "SingularSystem";
    case ErrorKind::kMaxIterations: return "MaxIterations";
    case ErrorKind::kInfeasibleProblem: return "InfeasibleProblem";
    case ErrorKind::kMissingClass: return "MissingClass";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kEmptyFile: return "EmptyFile";
    case ErrorKind::kRaggedRows: return "RaggedRows";
    case ErrorKind::kNonBinaryLabels: return "NonBinaryLabels";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kNotBinary: return "NotBinary";
    case ErrorKind::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace pairwise
