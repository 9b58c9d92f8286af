#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ofbm {

/// Selfsimilarity exponents, one per component, 0 < H_1 <= ... <= H_M < 1.
struct HurstVector {
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] double operator[](std::size_t m) const { return values[m]; }
  bool operator==(const HurstVector&) const = default;
};

/// Pre-mixing covariance, stored as per-component variances plus a correlation
/// matrix; Sigma = diag(sigma) * rho * diag(sigma).
struct IntrinsicCovariance {
  Eigen::VectorXd variances;
  Eigen::MatrixXd correlations;

  [[nodiscard]] Eigen::MatrixXd sigma() const;
  bool operator==(const IntrinsicCovariance& other) const {
    return variances == other.variances && correlations == other.correlations;
  }
};

struct MixingMatrix {
  Eigen::MatrixXd entries;

  bool operator==(const MixingMatrix& other) const { return entries == other.entries; }
};

class ModelParams;
ModelParams validate_params(HurstVector h, IntrinsicCovariance s, MixingMatrix w);

/// Validated parameterization of a mixture of correlated fBms:
/// B(t) = W * (B_{H_1}(t), ..., B_{H_M}(t)), the inner fBms having covariance Sigma at t = 1.
/// Only obtainable through validate_params().
class ModelParams {
 public:
  [[nodiscard]] const HurstVector& hurst() const noexcept { return hurst_; }
  [[nodiscard]] const IntrinsicCovariance& covariance() const noexcept { return cov_; }
  [[nodiscard]] const MixingMatrix& mixing() const noexcept { return mixing_; }
  [[nodiscard]] const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  [[nodiscard]] std::size_t dim() const noexcept { return hurst_.size(); }

  bool operator==(const ModelParams& other) const {
    return hurst_ == other.hurst_ && cov_ == other.cov_ && mixing_ == other.mixing_;
  }

 private:
  friend ModelParams validate_params(HurstVector, IntrinsicCovariance, MixingMatrix);
  ModelParams(HurstVector h, IntrinsicCovariance s, MixingMatrix w);

  HurstVector hurst_;
  IntrinsicCovariance cov_;
  MixingMatrix mixing_;
  Eigen::MatrixXd sigma_;
};

struct OfbmEquivalent {
  Eigen::MatrixXd aastar;        // A A*
  Eigen::MatrixXd hurst_matrix;  // W diag(H) W^-1
  Eigen::MatrixXd g_matrix;
};

/// Largest admissible |rho_12| for a bivariate pair with exponents (h1, h2).
double rho_max(double h1, double h2);

/// Gamma(h1+h2+1) sin((h1+h2) pi/2) / (2 pi).
double g_coefficient(double h1, double h2);

OfbmEquivalent ofbm_equivalent(const ModelParams& p);

/// {"H":[...], "var":[...], "rho":[[...]], "W":[[...]]}
nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);

/// Shorthand used by tests and examples: unit variances.
ModelParams make_params(std::vector<double> h, const Eigen::MatrixXd& rho, const Eigen::MatrixXd& w);

}  // namespace ofbm
