#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stab360 {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateGeometry,
  kParseError,
  kValidationError,
  kUnsupportedFormat,
  kInsufficientData,
  kNoConvergence,
  kRobustFitFailure,
  kGenerationFailure,
  kIoError,
};

// Stable kebab-case name, used in CLI diagnostics.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stab360
