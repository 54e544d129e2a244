#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace gks {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  InvalidModel,
  InvalidArgument,
  DimensionMismatch,
  SingularR,
  SingularBlock,
  NotPositiveDefinite,
  NotImplemented,
  NonSmoothLoss,
  StepSizeViolation,
  UnsupportedConstraint,
  UnsupportedLoss,
  SingularKkt,
  LineSearchFailure,
  MaxItersExceeded,
  DualInfeasible,
  ZeroTruth,
  Config,
  Io,
};

const char* to_string(ErrorCode code);

/// All library failures are reported with this exception type.
/// `index` carries the offending time/block index when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace gks
