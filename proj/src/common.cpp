#include "gks/common.hpp"

namespace gks {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularR: return "SingularR";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotImplemented: return "NotImplemented";
    case ErrorCode::NonSmoothLoss: return "NonSmoothLoss";
    case ErrorCode::StepSizeViolation: return "StepSizeViolation";
    case ErrorCode::UnsupportedConstraint: return "UnsupportedConstraint";
    case ErrorCode::UnsupportedLoss: return "UnsupportedLoss";
    case ErrorCode::SingularKkt: return "SingularKkt";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::MaxItersExceeded: return "MaxItersExceeded";
    case ErrorCode::DualInfeasible: return "DualInfeasible";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {
std::string format_message(ErrorCode code, const std::string& what, std::optional<std::size_t> index) {
  std::string msg = std::string(to_string(code)) + ": " + what;
  if (index) msg += " (index " + std::to_string(*index) + ")";
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& what, std::optional<std::size_t> index)
    : std::runtime_error(format_message(code, what, index)), code_(code), index_(index) {}

}  // namespace gks
