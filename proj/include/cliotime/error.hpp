#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cliotime {

enum class ErrorCode {
  // data errors
  Format,
  RowParse,
  Duplicate,
  Grid,
  DegenerateScale,
  State,
  NoCentralSegment,
  Io,
  Parameter,
  // numerical failures
  InsufficientData,
  DegenerateBandwidth,
  UnimodalDensity,
  NoCrossing,
  Singularity,
  UndefinedMetric,
  InvertedThresholds,
  Estimate,
  Ensemble,
  FitInfeasible,
};

enum class ErrorCategory { Data, Numerical };

inline ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Format:
    case ErrorCode::RowParse:
    case ErrorCode::Duplicate:
    case ErrorCode::Grid:
    case ErrorCode::DegenerateScale:
    case ErrorCode::State:
    case ErrorCode::NoCentralSegment:
    case ErrorCode::Io:
    case ErrorCode::Parameter:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Numerical;
  }
}

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Format: return "format";
    case ErrorCode::RowParse: return "row-parse";
    case ErrorCode::Duplicate: return "duplicate";
    case ErrorCode::Grid: return "century-grid";
    case ErrorCode::DegenerateScale: return "degenerate-scale";
    case ErrorCode::State: return "state";
    case ErrorCode::NoCentralSegment: return "no-central-segment";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parameter: return "parameter";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::DegenerateBandwidth: return "degenerate-bandwidth";
    case ErrorCode::UnimodalDensity: return "unimodal-density";
    case ErrorCode::NoCrossing: return "no-crossing";
    case ErrorCode::Singularity: return "singularity";
    case ErrorCode::UndefinedMetric: return "undefined-metric";
    case ErrorCode::InvertedThresholds: return "inverted-thresholds";
    case ErrorCode::Estimate: return "estimate";
    case ErrorCode::Ensemble: return "ensemble";
    case ErrorCode::FitInfeasible: return "fit-infeasible";
  }
  return "unknown";
}

/// Every failure raised by the library. The code selects the CLI exit status
/// through its category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

/// Parse failure tied to a 1-based line of the input file.
class RowError : public Error {
 public:
  RowError(std::size_t line, const std::string& message)
      : Error(ErrorCode::RowParse, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cliotime
