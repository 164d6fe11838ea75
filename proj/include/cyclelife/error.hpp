#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cyclelife {

enum class ErrorCode {
  MissingFile,
  IoError,
  SchemaViolation,
  MonotonicityViolation,
  InvalidParams,
  InvalidArgument,
  UnknownCellId,
  OverlappingSplits,
  DegenerateCurve,
  MissingBaselineCycle,
  MissingCycle,
  EmptyWindow,
  WindowExceedsLife,
  WindowExceedsData,
  ShiftExceedsData,
  EmptyInput,
  LengthMismatch,
  DegenerateVariance,
  DegenerateDesign,
  InvalidArchitecture,
  ShapeMismatch,
  StaleCache,
  NonFiniteGradient,
  NonFiniteLoss,
  ZeroActual,
  ArtifactVersionMismatch,
  ToleranceExceeded,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownCellId: return "UnknownCellId";
    case ErrorCode::OverlappingSplits: return "OverlappingSplits";
    case ErrorCode::DegenerateCurve: return "DegenerateCurve";
    case ErrorCode::MissingBaselineCycle: return "MissingBaselineCycle";
    case ErrorCode::MissingCycle: return "MissingCycle";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::WindowExceedsLife: return "WindowExceedsLife";
    case ErrorCode::WindowExceedsData: return "WindowExceedsData";
    case ErrorCode::ShiftExceedsData: return "ShiftExceedsData";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::InvalidArchitecture: return "InvalidArchitecture";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ZeroActual: return "ZeroActual";
    case ErrorCode::ArtifactVersionMismatch: return "ArtifactVersionMismatch";
    case ErrorCode::ToleranceExceeded: return "ToleranceExceeded";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  // I/O and schema problems map to exit status 2, everything else to 1.
  bool is_io() const noexcept {
    return code_ == ErrorCode::MissingFile || code_ == ErrorCode::IoError ||
           code_ == ErrorCode::SchemaViolation || code_ == ErrorCode::ArtifactVersionMismatch;
  }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cyclelife
