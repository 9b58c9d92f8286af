#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ofbm/estimation.hpp"
#include "ofbm/model.hpp"
#include "ofbm/synthesis.hpp"
#include "ofbm/wavelet.hpp"

namespace ofbm {

enum class Estimator { Univariate = 0, Multivariate = 1, MultivariateBc = 2 };

inline constexpr std::array<Estimator, 3> kEstimators = {Estimator::Univariate, Estimator::Multivariate,
                                                         Estimator::MultivariateBc};

/// "H_U", "H_M", "H_M_bc".
std::string to_string(Estimator e);

// --- diagnostics ----------------------------------------------------------

struct PerformanceMatrices {
  Eigen::MatrixXd bias2;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd mse;
};

/// Rows of `est` are realizations. cov and mse use the 1/n_mc normalization so
/// that mse = bias2 + cov holds exactly.
PerformanceMatrices performance_matrices(const Eigen::MatrixXd& est, const Eigen::VectorXd& h_true);

/// Largest absolute eigenvalue.
double spectral_norm(const Eigen::MatrixXd& m);

/// ((log2 e)^2 / 2) sum_j w_j^2 / n_j, counts aligned with w.j1..w.j2.
double v_n_approx(const RegressionWeights& w, std::span<const std::size_t> counts);

/// Squared Mahalanobis distance of every row to the row mean, with the
/// unbiased across-row covariance.
Eigen::VectorXd mahalanobis_samples(const Eigen::MatrixXd& est);

/// Inverse CDF of the chi-square distribution, absolute accuracy 1e-10.
double chi2_quantile(int dof, double p);
std::vector<double> chi2_quantiles(int dof, std::span<const double> probs);

/// Sorted distances against chi-square plotting positions (i - 1/2)/n.
struct QqPairs {
  std::vector<double> empirical;
  std::vector<double> theoretical;
  double correlation = 0.0;
};

QqPairs chi2_qq(std::span<const double> distances, int dof);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation matrix of the columns of `est`.
Eigen::MatrixXd estimate_correlation(const Eigen::MatrixXd& est);

// --- Monte Carlo ----------------------------------------------------------

struct McConfig {
  explicit McConfig(ModelParams p) : params(std::move(p)) {}

  ModelParams params;
  std::size_t n = 0;
  std::size_t n_mc = 0;
  std::uint64_t seed0 = 0;
  ScalingRangeConfig range_cfg{};
  WaveletFilter filter = WaveletFilter::default_filter();
  WeightBalance balance = WeightBalance::ByCount;
  std::optional<int> j1_override;
  std::optional<int> j2_override;
  unsigned threads = 1;
};

struct EstimatorSummary {
  Eigen::MatrixXd estimates;  // n_mc x M
  PerformanceMatrices perf;
  Eigen::MatrixXd corr;          // empty when n_mc < 3
  Eigen::VectorXd mahalanobis;   // empty when n_mc <= M
  std::optional<double> qq_correlation;
  Eigen::VectorXd variance;      // diagonal of cov
  Eigen::VectorXd rel_var_diff;  // (variance - V_N) / V_N
};

struct McReport {
  std::size_t n = 0;
  std::size_t n_mc = 0;
  std::uint64_t seed0 = 0;
  int j1 = 0;
  int j2 = 0;
  std::vector<std::size_t> counts;  // n_j for j1..j2
  Eigen::VectorXd h_true;           // sorted exponents
  RegressionWeights weights;
  double v_n = 0.0;
  EmbeddingReport embedding;
  std::array<EstimatorSummary, 3> estimators;
  Eigen::Matrix3d spectral_norms;  // estimator x {bias2, cov, mse}
  std::optional<std::string> warning;

  [[nodiscard]] const EstimatorSummary& at(Estimator e) const { return estimators[static_cast<std::size_t>(e)]; }
};

/// Realization r = 1..n_mc uses seed seed0 + r. The report does not depend on
/// the thread count.
McReport run_mc(const McConfig& cfg);

/// Aggregation step of run_mc, usable on externally produced estimates.
McReport summarize_mc(McReport base, const std::array<Eigen::MatrixXd, 3>& estimates);

nlohmann::json to_json(const McReport& r);

/// Rows `r,estimator,m,value`, r and m 1-based.
std::string estimates_csv(const McReport& r);
/// Rows `estimator,i,empirical,theoretical`.
std::string qq_csv(const McReport& r);
/// Rows `log2N,estimator,bias2,cov,mse` (spectral norms).
std::string norms_csv(const McReport& r);
/// Rows `estimator,m,m2,corr`.
std::string corr_csv(const McReport& r);

// --- group comparison -----------------------------------------------------

/// Two-sided rank-sum p-value. Exact enumeration over midranks when both
/// samples have at most 8 values; normal approximation with tie and
/// continuity corrections otherwise.
double wilcoxon_ranksum(std::span<const double> x, std::span<const double> y);

struct GroupTestReport {
  std::vector<double> pvalues;      // ascending
  std::vector<std::size_t> order;   // original index of each sorted p-value
  std::vector<double> thresholds;   // k alpha / K
  std::vector<bool> rejected;       // in sorted order, a prefix
  double alpha = 0.0;

  /// Rejection flags in the caller's original order.
  [[nodiscard]] std::vector<bool> rejected_by_index() const;
};

GroupTestReport bh_reject(std::span<const double> pvals, double alpha);

nlohmann::json to_json(const GroupTestReport& r);
/// Rows `rank,index,name,p,threshold,rejected`, indices 1-based.
std::string group_test_csv(const GroupTestReport& r, std::span<const std::string> names = {});

// --- sliding windows ------------------------------------------------------

struct WindowEstimate {
  std::size_t start = 0;
  EstimateRecord record;
};

/// One estimate per window start 0, hop, 2 hop, ... with start + window <= N.
std::vector<WindowEstimate> sliding_window_estimates(const Eigen::MatrixXd& x, std::size_t window, std::size_t hop,
                                                     int j1, int j2,
                                                     const WaveletFilter& f = WaveletFilter::default_filter(),
                                                     WeightBalance balance = WeightBalance::ByCount);

/// Label of each window when all of its samples share one label, nullopt otherwise.
std::vector<std::optional<std::string>> window_labels(std::span<const std::string> labels, std::size_t window,
                                                      std::size_t hop);

}  // namespace ofbm
