#pragma once

#include <stdexcept>
#include <string>

namespace nhse {

enum class ErrorCode {
  InvalidParameter,
  StepSizeUnderflow,
  MaxLengthExceeded,
  OutOfSpan,
  DegenerateTrajectory,
  InsufficientEvents,
  NoReturn,
  NoConvergence,
  StepUnderflow,
  NoFoldInBranch,
  BracketInvalid,
  UndecidedAtMidpoint,
  QuadratureFailure,
  ConfigError,
  UnknownFigure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::MaxLengthExceeded: return "MaxLengthExceeded";
    case ErrorCode::OutOfSpan: return "OutOfSpan";
    case ErrorCode::DegenerateTrajectory: return "DegenerateTrajectory";
    case ErrorCode::InsufficientEvents: return "InsufficientEvents";
    case ErrorCode::NoReturn: return "NoReturn";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::NoFoldInBranch: return "NoFoldInBranch";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::UndecidedAtMidpoint: return "UndecidedAtMidpoint";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownFigure: return "UnknownFigure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nhse
