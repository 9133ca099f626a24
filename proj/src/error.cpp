#include "smallscat/error.hpp"

namespace smallscat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Overlap: return "OverlapError";
    case ErrorCode::MethodMismatch: return "MethodMismatch";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::TooClose: return "TooClose";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::SmallnessViolation: return "SmallnessViolation";
    case ErrorCode::InsideNearZone: return "InsideNearZone";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DensityTooHigh: return "DensityTooHigh";
    case ErrorCode::Resolution: return "ResolutionError";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::PassivityViolation: return "PassivityViolation";
    case ErrorCode::NonRealIndex: return "NonRealIndex";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace smallscat
