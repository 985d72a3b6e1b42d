#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bctrace {

// Every failure the library can report. Grouped by the exit status the CLI
// maps them to (see exit_status()).
enum class ErrorCode {
  // Input errors (exit 2).
  kMalformedRow,
  kNonMonotoneTime,
  kUnknownClass,
  kMissingKey,
  kTypeMismatch,
  kEmptyInput,
  kMissingAtn,
  kMissingFile,
  kSchemaMismatch,
  kOutOfOrderFrame,
  kBadConfig,
  kBadParams,
  kBadThresholds,
  kBadK,
  kGridEmpty,
  kLengthMismatch,
  kTooManyFeatures,
  kEmptyBackground,
  // Invariant violations (exit 3).
  kRangeError,
  kDegenerateVariance,
  kZeroNorm,
  kZeroVariance,
  kInsufficientOverlap,
  kShiftTooLarge,
  kInsufficientLines,
  kNoWeatherCoverage,
  kTooFewRows,
  kDatasetTooShort,
  kSingularDesign,
  // Anything else (exit 4).
  kInternal,
};

std::string_view to_string(ErrorCode code);

// Exception type thrown across the library. Parsers attach the 1-based line
// number of the offending input row.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  // The message without the code and line prefix of what().
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<std::size_t> line_;
};

// 2 = input error, 3 = invariant violation, 4 = internal.
int exit_status(ErrorCode code);

}  // namespace bctrace
