#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ofbm {

enum class ErrorCode {
  DimensionMismatch,
  HurstOutOfRange,
  HurstUnsorted,
  SingularMixing,
  CovarianceNotPSD,
  CorrelationInfeasible,
  IndexOutOfRange,
  EmbeddingFailed,
  SeriesTooShort,
  BadFilter,
  ScaleUnavailable,
  WindowTooSmall,
  InsufficientCoefficients,
  DegenerateRange,
  SampleTooSmall,
  NotSymmetric,
  NonPositiveDiagonal,
  NonPositiveEigenvalue,
  RankDeficient,
  SingularCovariance,
  BadProbability,
  EmptySample,
  ZeroVariance,
  InvalidArgument,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure path carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Pairwise correlation exceeds the bound implied by the two Hurst exponents.
/// `first`/`second` are 0-based component indices; both are -1 when the
/// violation is joint (no single pair is responsible).
class CorrelationInfeasible : public Error {
 public:
  CorrelationInfeasible(int first, int second, double rho, double rho_max, const std::string& what)
      : Error(ErrorCode::CorrelationInfeasible, what),
        first_(first), second_(second), rho_(rho), rho_max_(rho_max) {}

  [[nodiscard]] int first() const noexcept { return first_; }
  [[nodiscard]] int second() const noexcept { return second_; }
  [[nodiscard]] double rho() const noexcept { return rho_; }
  [[nodiscard]] double rho_max() const noexcept { return rho_max_; }

 private:
  int first_;
  int second_;
  double rho_;
  double rho_max_;
};

}  // namespace ofbm
