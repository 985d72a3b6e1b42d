#include "bctrace/error.hpp"

#include <utility>

namespace bctrace {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kNonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingAtn: return "MissingAtn";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kOutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kBadThresholds: return "BadThresholds";
    case ErrorCode::kBadK: return "BadK";
    case ErrorCode::kGridEmpty: return "GridEmpty";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooManyFeatures: return "TooManyFeatures";
    case ErrorCode::kEmptyBackground: return "EmptyBackground";
    case ErrorCode::kRangeError: return "RangeError";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kShiftTooLarge: return "ShiftTooLarge";
    case ErrorCode::kInsufficientLines: return "InsufficientLines";
    case ErrorCode::kNoWeatherCoverage: return "NoWeatherCoverage";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kDatasetTooShort: return "DatasetTooShort";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)),
      code_(code),
      message_(std::move(message)),
      line_(line) {}

int exit_status(ErrorCode code) {
  if (code == ErrorCode::kInternal) return 4;
  if (code >= ErrorCode::kRangeError) return 3;
  return 2;
}

}  // namespace bctrace
