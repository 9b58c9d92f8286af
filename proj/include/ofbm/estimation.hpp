#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ofbm/model.hpp"
#include "ofbm/wavelet.hpp"

namespace ofbm {

enum class WeightBalance { Uniform, ByCount };

std::string to_string(WeightBalance b);
WeightBalance weight_balance_from_string(const std::string& s);  // "uniform", "by-count"/"by_count"

/// Slope weights over octaves j1..j2: sum w = 0, sum j w = 1.
struct RegressionWeights {
  int j1 = 0;
  int j2 = 0;
  std::vector<double> w;

  [[nodiscard]] double at(int j) const;
  [[nodiscard]] std::size_t size() const noexcept { return w.size(); }
};

/// Weighted least squares: w_j = b_j (V0 j - V1) / (V0 V2 - V1^2), V_p = sum b_j j^p,
/// b_j = 1 or n_j. `counts` holds n_j for j1..j2 and is only read for ByCount.
RegressionWeights regression_weights(int j1, int j2, WeightBalance balance,
                                     std::span<const std::size_t> counts = {});

struct ScalingRangeConfig {
  int j1_0 = 6;
  int j2_0 = 9;
  double beta = 0.9;
  std::size_t n0 = std::size_t{1} << 13;
  std::optional<double> varpi_hint;

  void validate() const;
};

struct ScalingRange {
  int j1 = 0;
  int j2 = 0;
  std::optional<std::string> warning;  // set when beta <= 1 / (2 varpi + 1)
};

/// a = 2^floor(beta log2(n / n0)); (j1, j2) = (j1_0, j2_0) + log2 a.
ScalingRange scaling_range(std::size_t n, const ScalingRangeConfig& cfg);

/// min(smallest positive gap between consecutive H, H_1/2 + 1/4).
double varpi(const HurstVector& h);

/// Ascending eigenvalues of a symmetric matrix.
Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& s);

Eigen::VectorXd estimate_univariate(const WaveletSpectrumSet& spectra, const RegressionWeights& w);
Eigen::VectorXd estimate_multivariate(const WaveletSpectrumSet& spectra, const RegressionWeights& w);

/// Regression on window-averaged log2 eigenvalues, windows of n_{j2} coefficients.
Eigen::VectorXd estimate_multivariate_bc(const WaveletPyramid& pyr, int j1, int j2, const RegressionWeights& w);

/// Per-scale log2 eigenvalues averaged across windows, one row per octave j1..j2.
Eigen::MatrixXd windowed_log_eigenvalues(const WaveletPyramid& pyr, int j1, int j2);

struct EstimateRecord {
  Eigen::VectorXd h_u;
  Eigen::VectorXd h_m;
  Eigen::VectorXd h_m_bc;
  int j1 = 0;
  int j2 = 0;
  RegressionWeights weights;
  Eigen::MatrixXd log_eig;     // (j2-j1+1) x M, ascending per row
  Eigen::MatrixXd log_eig_bc;  // (j2-j1+1) x M
  Eigen::MatrixXd diag_logs;   // (j2-j1+1) x M
};

/// All three estimators on one pyramid over octaves j1..j2.
EstimateRecord estimate_all(const WaveletPyramid& pyr, int j1, int j2, WeightBalance balance);

nlohmann::json to_json(const EstimateRecord& r);
EstimateRecord estimate_record_from_json(const nlohmann::json& j);

}  // namespace ofbm
