#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpflow {

enum class ErrorCode {
  NotStronglyConnected,
  NumericalFailure,
  DimensionMismatch,
  InfeasibleProblem,
  ValueUnavailable,
  EstimatorSingular,
  NonFiniteState,
  ScaleTooLarge,
  ProxFailure,
  InvalidArgument,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorCode::ValueUnavailable: return "ValueUnavailable";
    case ErrorCode::EstimatorSingular: return "EstimatorSingular";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorCode::ProxFailure: return "ProxFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Library-wide exception; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mpflow
