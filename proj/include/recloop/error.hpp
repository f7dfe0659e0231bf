#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace recloop {

enum class ErrorCode {
  NonSimplexWeights,
  OutOfRangePrejudice,
  OutOfRangeEpsilon,
  CountersNotInitialized,
  DegenerateWeights,
  AlphaZero,
  GammaZero,
  TmaxTooSmall,
  InvalidArgument,
  MissingBaseline,
  ParseError,
  ValidationError,
  ModeFieldMissing,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonSimplexWeights: return "NonSimplexWeights";
    case ErrorCode::OutOfRangePrejudice: return "OutOfRangePrejudice";
    case ErrorCode::OutOfRangeEpsilon: return "OutOfRangeEpsilon";
    case ErrorCode::CountersNotInitialized: return "CountersNotInitialized";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::AlphaZero: return "AlphaZero";
    case ErrorCode::GammaZero: return "GammaZero";
    case ErrorCode::TmaxTooSmall: return "TmaxTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::ModeFieldMissing: return "ModeFieldMissing";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `field()` names the offending input
/// when one exists (config key, parameter name), otherwise it is empty.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace recloop
