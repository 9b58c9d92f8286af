#include "ofbm/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ofbm/error.hpp"
#include "ofbm/io.hpp"

namespace ofbm {

std::string to_string(WeightBalance b) { return b == WeightBalance::Uniform ? "uniform" : "by-count"; }

WeightBalance weight_balance_from_string(const std::string& s) {
  if (s == "uniform") return WeightBalance::Uniform;
  if (s == "by-count" || s == "by_count") return WeightBalance::ByCount;
  throw Error(ErrorCode::InvalidArgument, "unknown weight mode '" + s + "' (expected uniform or by-count)");
}

double RegressionWeights::at(int j) const {
  if (j < j1 || j > j2) throw Error(ErrorCode::ScaleUnavailable, "no weight for octave " + std::to_string(j));
  return w[static_cast<std::size_t>(j - j1)];
}

RegressionWeights regression_weights(int j1, int j2, WeightBalance balance, std::span<const std::size_t> counts) {
  if (j2 <= j1)
    throw Error(ErrorCode::DegenerateRange,
                "regression needs j2 > j1, got [" + std::to_string(j1) + ", " + std::to_string(j2) + "]");
  const auto len = static_cast<std::size_t>(j2 - j1 + 1);
  std::vector<double> b(len, 1.0);
  if (balance == WeightBalance::ByCount) {
    if (counts.size() != len)
      throw Error(ErrorCode::DimensionMismatch, "by-count weights need one count per octave in [j1, j2]");
    for (std::size_t i = 0; i < len; ++i) {
      if (counts[i] == 0) throw Error(ErrorCode::InsufficientCoefficients, "zero coefficients at a regression octave");
      b[i] = static_cast<double>(counts[i]);
    }
  }
  double v0 = 0.0, v1 = 0.0, v2 = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double j = j1 + static_cast<double>(i);
    v0 += b[i];
    v1 += b[i] * j;
    v2 += b[i] * j * j;
  }
  const double det = v0 * v2 - v1 * v1;
  RegressionWeights out{j1, j2, std::vector<double>(len)};
  for (std::size_t i = 0; i < len; ++i) {
    const double j = j1 + static_cast<double>(i);
    out.w[i] = b[i] * (v0 * j - v1) / det;
  }
  return out;
}

void ScalingRangeConfig::validate() const {
  if (j1_0 < 1 || j2_0 <= j1_0)
    throw Error(ErrorCode::DegenerateRange, "base octaves need 1 <= j1_0 < j2_0");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must lie in (0, 1)");
  if (j2_0 >= 63 || n0 < (std::size_t{1} << j2_0))
    throw Error(ErrorCode::InvalidArgument, "n0 must be at least 2^j2_0");
  if (varpi_hint && !(*varpi_hint > 0.0)) throw Error(ErrorCode::InvalidArgument, "varpi must be positive");
}

ScalingRange scaling_range(std::size_t n, const ScalingRangeConfig& cfg) {
  cfg.validate();
  if (n < cfg.n0)
    throw Error(ErrorCode::SampleTooSmall,
                "sample size " + std::to_string(n) + " below reference size " + std::to_string(cfg.n0));
  const double ratio = std::log2(static_cast<double>(n) / static_cast<double>(cfg.n0));
  // The epsilon keeps exact powers of two from rounding down.
  const int shift = static_cast<int>(std::floor(cfg.beta * ratio + 1e-9));
  ScalingRange r{cfg.j1_0 + shift, cfg.j2_0 + shift, std::nullopt};
  if (cfg.varpi_hint && cfg.beta <= 1.0 / (2.0 * *cfg.varpi_hint + 1.0)) {
    r.warning = "beta = " + io::format_double(cfg.beta) + " is not above 1/(2 varpi + 1) = " +
                io::format_double(1.0 / (2.0 * *cfg.varpi_hint + 1.0));
  }
  return r;
}

double varpi(const HurstVector& h) {
  if (h.size() == 0) throw Error(ErrorCode::DimensionMismatch, "empty Hurst vector");
  double v = h[0] / 2.0 + 0.25;
  for (std::size_t i = 1; i < h.size(); ++i) {
    const double gap = h[i] - h[i - 1];
    if (gap > 0.0) v = std::min(v, gap);
  }
  return v;
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || s.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "expected a square matrix");
  const double scale = std::max(s.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw Error(ErrorCode::NotSymmetric, "matrix asymmetry exceeds 1e-8 relative");
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = solver.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

namespace {

void check_weights_cover(const WaveletSpectrumSet& spectra, const RegressionWeights& w) {
  for (int j = w.j1; j <= w.j2; ++j)
    if (!spectra.has(j)) throw Error(ErrorCode::ScaleUnavailable, "spectrum missing at octave " + std::to_string(j));
}

Eigen::VectorXd log2_eigenvalues(const Eigen::MatrixXd& s, int j) {
  const Eigen::VectorXd ev = sorted_eigenvalues(s);
  if (ev(0) <= 0.0)
    throw Error(ErrorCode::NonPositiveEigenvalue,
                "eigenvalue " + io::format_double(ev(0)) + " at octave " + std::to_string(j));
  return ev.array().log() / std::log(2.0);
}

Eigen::VectorXd regress(const Eigen::MatrixXd& logs, const RegressionWeights& w) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(logs.cols());
  for (Eigen::Index i = 0; i < logs.rows(); ++i) acc += w.w[static_cast<std::size_t>(i)] * logs.row(i).transpose();
  return 0.5 * (acc.array() - 1.0);
}

Eigen::MatrixXd diag_log_table(const WaveletSpectrumSet& spectra, const RegressionWeights& w) {
  check_weights_cover(spectra, w);
  const auto m = spectra.at(w.j1).rows();
  Eigen::MatrixXd logs(static_cast<Eigen::Index>(w.size()), m);
  for (int j = w.j1; j <= w.j2; ++j) {
    const auto& s = spectra.at(j);
    for (Eigen::Index c = 0; c < m; ++c) {
      if (!(s(c, c) > 0.0))
        throw Error(ErrorCode::NonPositiveDiagonal,
                    "S_" + std::to_string(c + 1) + std::to_string(c + 1) + " at octave " + std::to_string(j));
      logs(j - w.j1, c) = std::log2(s(c, c));
    }
  }
  return logs;
}

Eigen::MatrixXd eig_log_table(const WaveletSpectrumSet& spectra, const RegressionWeights& w) {
  check_weights_cover(spectra, w);
  const auto m = spectra.at(w.j1).rows();
  Eigen::MatrixXd logs(static_cast<Eigen::Index>(w.size()), m);
  for (int j = w.j1; j <= w.j2; ++j) {
    if (spectra.count_at(j) < static_cast<std::size_t>(m))
      throw Error(ErrorCode::RankDeficient, "octave " + std::to_string(j) + " has " +
                                                std::to_string(spectra.count_at(j)) + " coefficients for " +
                                                std::to_string(m) + " components");
    logs.row(j - w.j1) = log2_eigenvalues(spectra.at(j), j).transpose();
  }
  return logs;
}

}  // namespace

Eigen::VectorXd estimate_univariate(const WaveletSpectrumSet& spectra, const RegressionWeights& w) {
  return regress(diag_log_table(spectra, w), w);
}

Eigen::VectorXd estimate_multivariate(const WaveletSpectrumSet& spectra, const RegressionWeights& w) {
  return regress(eig_log_table(spectra, w), w);
}

Eigen::MatrixXd windowed_log_eigenvalues(const WaveletPyramid& pyr, int j1, int j2) {
  if (j2 <= j1)
    throw Error(ErrorCode::DegenerateRange,
                "regression needs j2 > j1, got [" + std::to_string(j1) + ", " + std::to_string(j2) + "]");
  const auto m = static_cast<Eigen::Index>(pyr.dim());
  Eigen::MatrixXd logs(j2 - j1 + 1, m);
  for (int j = j1; j <= j2; ++j) {
    const auto windows = windowed_spectra(pyr, j, j2);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    for (const auto& s : windows) acc += log2_eigenvalues(s, j);
    logs.row(j - j1) = (acc / static_cast<double>(windows.size())).transpose();
  }
  return logs;
}

Eigen::VectorXd estimate_multivariate_bc(const WaveletPyramid& pyr, int j1, int j2, const RegressionWeights& w) {
  if (w.j1 != j1 || w.j2 != j2) throw Error(ErrorCode::DimensionMismatch, "weights do not span [j1, j2]");
  return regress(windowed_log_eigenvalues(pyr, j1, j2), w);
}

EstimateRecord estimate_all(const WaveletPyramid& pyr, int j1, int j2, WeightBalance balance) {
  if (j2 <= j1)
    throw Error(ErrorCode::DegenerateRange,
                "regression needs j2 > j1, got [" + std::to_string(j1) + ", " + std::to_string(j2) + "]");
  if (j1 < 1) throw Error(ErrorCode::ScaleUnavailable, "octaves start at 1");
  // An unreachable j2 means zero coefficients per window.
  if (j2 > pyr.max_scale())
    throw Error(ErrorCode::WindowTooSmall, "octave " + std::to_string(j2) + " exceeds the available depth " +
                                               std::to_string(pyr.max_scale()) + " for a series of length " +
                                               std::to_string(pyr.source_length()));
  const auto spectra = spectrum_set(pyr, j1, j2);
  EstimateRecord r;
  r.j1 = j1;
  r.j2 = j2;
  r.weights = regression_weights(j1, j2, balance, spectra.counts);
  r.log_eig_bc = windowed_log_eigenvalues(pyr, j1, j2);
  r.diag_logs = diag_log_table(spectra, r.weights);
  r.log_eig = eig_log_table(spectra, r.weights);
  r.h_u = regress(r.diag_logs, r.weights);
  r.h_m = regress(r.log_eig, r.weights);
  r.h_m_bc = regress(r.log_eig_bc, r.weights);
  return r;
}

nlohmann::json to_json(const EstimateRecord& r) {
  return {{"H_U", io::to_json(r.h_u)},
          {"H_M", io::to_json(r.h_m)},
          {"H_M_bc", io::to_json(r.h_m_bc)},
          {"j1", r.j1},
          {"j2", r.j2},
          {"weights", r.weights.w},
          {"log_eig", io::to_json(r.log_eig)},
          {"log_eig_bc", io::to_json(r.log_eig_bc)},
          {"diag_logs", io::to_json(r.diag_logs)}};
}

EstimateRecord estimate_record_from_json(const nlohmann::json& j) {
  try {
    EstimateRecord r;
    r.h_u = io::vector_from_json(j.at("H_U"));
    r.h_m = io::vector_from_json(j.at("H_M"));
    r.h_m_bc = io::vector_from_json(j.at("H_M_bc"));
    r.j1 = j.at("j1").get<int>();
    r.j2 = j.at("j2").get<int>();
    r.weights = RegressionWeights{r.j1, r.j2, j.at("weights").get<std::vector<double>>()};
    r.log_eig = io::matrix_from_json(j.at("log_eig"));
    r.log_eig_bc = io::matrix_from_json(j.at("log_eig_bc"));
    r.diag_logs = io::matrix_from_json(j.at("diag_logs"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("estimate record: ") + e.what());
  }
}

}  // namespace ofbm
