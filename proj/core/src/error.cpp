#include "stab360/error.hpp"

namespace stab360 {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kValidationError: return "validation-error";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kNoConvergence: return "no-convergence";
    case ErrorCode::kRobustFitFailure: return "robust-fit-failure";
    case ErrorCode::kGenerationFailure: return "generation-failure";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

}  // namespace stab360
