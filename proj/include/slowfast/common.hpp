#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace slowfast {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
  InvalidArgument,
  NonFiniteCoefficient,
  MissingUStar,
  UnknownPreset,
  NonPositiveEpsilon,
  NonAdaptedKernel,
  GridMismatch,
  NonFiniteDerivative,
  NotBilinear,
  PolicyEvaluationFailure,
  NonDegenerateInitialValue,
  CflViolation,
  BoundaryDominance,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Error raised by every module of the library. The code identifies the
/// failure class so callers (and tests) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace slowfast
