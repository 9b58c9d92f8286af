#include "ofbm/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "ofbm/error.hpp"
#include "ofbm/io.hpp"

namespace ofbm {

namespace {

constexpr double kSingularMixingRatio = 1e-10;
constexpr double kPsdTolerance = 1e-10;

void require_hurst(double h) {
  if (!(h > 0.0 && h < 1.0)) {
    std::ostringstream msg;
    msg << "Hurst exponent " << h << " outside (0, 1)";
    throw Error(ErrorCode::HurstOutOfRange, msg.str());
  }
}

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

Eigen::MatrixXd IntrinsicCovariance::sigma() const {
  const Eigen::VectorXd sd = variances.array().sqrt();
  return sd.asDiagonal() * correlations * sd.asDiagonal();
}

ModelParams::ModelParams(HurstVector h, IntrinsicCovariance s, MixingMatrix w)
    : hurst_(std::move(h)), cov_(std::move(s)), mixing_(std::move(w)), sigma_(cov_.sigma()) {}

double g_coefficient(double h1, double h2) {
  const double sum = h1 + h2;
  return std::tgamma(sum + 1.0) * std::sin(sum * std::numbers::pi / 2.0) / (2.0 * std::numbers::pi);
}

double rho_max(double h1, double h2) {
  require_hurst(h1);
  require_hurst(h2);
  if (h1 == h2) return 1.0;
  const double num = std::tgamma(2.0 * h1 + 1.0) * std::tgamma(2.0 * h2 + 1.0) *
                     std::sin(std::numbers::pi * h1) * std::sin(std::numbers::pi * h2);
  const double den = std::tgamma(h1 + h2 + 1.0) * std::sin(std::numbers::pi / 2.0 * (h1 + h2));
  return std::sqrt(num) / std::abs(den);
}

ModelParams validate_params(HurstVector h, IntrinsicCovariance s, MixingMatrix w) {
  const auto m = static_cast<Eigen::Index>(h.size());
  if (m < 1) throw Error(ErrorCode::DimensionMismatch, "empty Hurst vector");
  if (s.variances.size() != m || s.correlations.rows() != m || s.correlations.cols() != m ||
      w.entries.rows() != m || w.entries.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch,
                "H has " + std::to_string(m) + " entries; var/rho/W must be sized accordingly");
  }

  for (double x : h.values) require_hurst(x);
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] < h[i - 1]) {
      throw Error(ErrorCode::HurstUnsorted, "H must be non-decreasing; H[" + std::to_string(i - 1) + "] > H[" +
                                                std::to_string(i) + "]");
    }
  }

  if (!w.entries.allFinite()) throw Error(ErrorCode::SingularMixing, "mixing matrix has non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w.entries);
  const auto& sv = svd.singularValues();
  if (!(sv(m - 1) >= kSingularMixingRatio * sv(0)) || sv(0) == 0.0)
    throw Error(ErrorCode::SingularMixing, "mixing matrix is numerically singular");

  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(s.variances(i) > 0.0) || !std::isfinite(s.variances(i)))
      throw Error(ErrorCode::CovarianceNotPSD, "variances must be positive and finite");
    if (s.correlations(i, i) != 1.0)
      throw Error(ErrorCode::CovarianceNotPSD, "correlation matrix must have a unit diagonal");
    for (Eigen::Index k = 0; k < m; ++k) {
      const double r = s.correlations(i, k);
      if (!(r >= -1.0 && r <= 1.0))
        throw Error(ErrorCode::CovarianceNotPSD, "correlations must lie in [-1, 1]");
      if (r != s.correlations(k, i)) throw Error(ErrorCode::CovarianceNotPSD, "correlation matrix is not symmetric");
    }
  }

  const Eigen::MatrixXd sigma = s.sigma();
  if (smallest_eigenvalue(sigma) < -kPsdTolerance * sigma.trace())
    throw Error(ErrorCode::CovarianceNotPSD, "Sigma has a negative eigenvalue");

  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = i + 1; k < m; ++k) {
      const double r = s.correlations(i, k);
      const double bound = rho_max(h[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(k)]);
      if (r * r > bound * bound * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "pair (" << i << ", " << k << "): |rho| = " << std::abs(r) << " exceeds rho_max = " << bound;
        throw CorrelationInfeasible(static_cast<int>(i), static_cast<int>(k), r, bound, msg.str());
      }
    }
  }

  // Joint admissibility: A A* = W (G o Sigma) W^T must be PSD, i.e. G o Sigma PSD.
  Eigen::MatrixXd gs(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < m; ++k)
      gs(i, k) = g_coefficient(h[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(k)]) * sigma(i, k);
  if (smallest_eigenvalue(gs) < -kPsdTolerance * gs.trace()) {
    throw CorrelationInfeasible(-1, -1, 0.0, 0.0,
                                "correlations jointly infeasible for these exponents (G o Sigma is not PSD)");
  }

  return ModelParams(std::move(h), std::move(s), std::move(w));
}

OfbmEquivalent ofbm_equivalent(const ModelParams& p) {
  const auto m = static_cast<Eigen::Index>(p.dim());
  const auto& h = p.hurst();
  OfbmEquivalent out;
  out.g_matrix.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < m; ++k)
      out.g_matrix(i, k) = g_coefficient(h[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(k)]);

  const auto& w = p.mixing().entries;
  const Eigen::MatrixXd inner = out.g_matrix.cwiseProduct(p.sigma());
  out.aastar = w * inner * w.transpose();
  out.aastar = 0.5 * (out.aastar + out.aastar.transpose()).eval();

  const Eigen::VectorXd hv = Eigen::Map<const Eigen::VectorXd>(h.values.data(), m);
  out.hurst_matrix = w * hv.asDiagonal() * w.inverse();
  return out;
}

nlohmann::json to_json(const ModelParams& p) {
  nlohmann::json j;
  j["H"] = p.hurst().values;
  j["var"] = io::to_json(p.covariance().variances);
  j["rho"] = io::to_json(p.covariance().correlations);
  j["W"] = io::to_json(p.mixing().entries);
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "model parameters must be a JSON object");
  for (const char* key : {"H", "rho", "W"})
    if (!j.contains(key)) throw Error(ErrorCode::Parse, std::string("missing key \"") + key + "\"");

  HurstVector h;
  for (const auto& x : j.at("H")) {
    if (!x.is_number()) throw Error(ErrorCode::Parse, "\"H\" entries must be numbers");
    h.values.push_back(x.get<double>());
  }
  IntrinsicCovariance s;
  s.correlations = io::matrix_from_json(j.at("rho"));
  s.variances = j.contains("var") ? io::vector_from_json(j.at("var"))
                                  : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(h.size()));
  MixingMatrix w{io::matrix_from_json(j.at("W"))};
  return validate_params(std::move(h), std::move(s), std::move(w));
}

ModelParams make_params(std::vector<double> h, const Eigen::MatrixXd& rho, const Eigen::MatrixXd& w) {
  const auto m = static_cast<Eigen::Index>(h.size());
  return validate_params(HurstVector{std::move(h)}, IntrinsicCovariance{Eigen::VectorXd::Ones(m), rho},
                         MixingMatrix{w});
}

}  // namespace ofbm
