#pragma once

#include <stdexcept>
#include <string>

namespace flagsel {

enum class ErrorCode {
  UnbalancedBraces,
  UnterminatedComment,
  UnterminatedLiteral,
  MappingIncomplete,
  InvalidOutcome,
  InvalidArgument,
  ManifestError,
  DatasetError,
  SchemaMismatch,
  ModelFormat,
  FeatureOrderMismatch,
  DivergenceDetected,
  BackendError,
  InvariantViolation,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnbalancedBraces: return "UnbalancedBraces";
    case ErrorCode::UnterminatedComment: return "UnterminatedComment";
    case ErrorCode::UnterminatedLiteral: return "UnterminatedLiteral";
    case ErrorCode::MappingIncomplete: return "MappingIncomplete";
    case ErrorCode::InvalidOutcome: return "InvalidOutcome";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::DatasetError: return "DatasetError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::FeatureOrderMismatch: return "FeatureOrderMismatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the failure
/// class so callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flagsel
