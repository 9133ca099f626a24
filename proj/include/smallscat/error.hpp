#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smallscat {

enum class ErrorCode {
  InvalidArgument,
  Overlap,
  MethodMismatch,
  SingularDenominator,
  TooClose,
  DegenerateDenominator,
  SmallnessViolation,
  InsideNearZone,
  SingularSystem,
  NoConvergence,
  DensityTooHigh,
  Resolution,
  ZeroDensity,
  PassivityViolation,
  NonRealIndex,
  Parse,
  Schema,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code identifies the failure
// class (overlap, singular system, schema violation, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace smallscat
