#include "ofbm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "ofbm/error.hpp"
#include "ofbm/io.hpp"
#include "ofbm/parallel.hpp"

namespace ofbm {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Univariate: return "H_U";
    case Estimator::Multivariate: return "H_M";
    case Estimator::MultivariateBc: return "H_M_bc";
  }
  return "?";
}

PerformanceMatrices performance_matrices(const Eigen::MatrixXd& est, const Eigen::VectorXd& h_true) {
  if (est.cols() != h_true.size())
    throw Error(ErrorCode::DimensionMismatch, "estimates have " + std::to_string(est.cols()) +
                                                  " columns, true vector has " + std::to_string(h_true.size()));
  if (est.rows() < 2) throw Error(ErrorCode::SampleTooSmall, "performance matrices need at least 2 realizations");
  const double n = static_cast<double>(est.rows());
  const Eigen::VectorXd mean = est.colwise().mean().transpose();
  const Eigen::VectorXd offset = mean - h_true;
  const Eigen::MatrixXd centered = est.rowwise() - mean.transpose();
  const Eigen::MatrixXd errors = est.rowwise() - h_true.transpose();
  PerformanceMatrices out;
  out.bias2 = offset * offset.transpose();
  out.cov = centered.transpose() * centered / n;
  out.mse = errors.transpose() * errors / n;
  return out;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "spectral norm needs a square matrix");
  if (m.size() == 0) return 0.0;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw Error(ErrorCode::NotSymmetric, "spectral norm needs a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double v_n_approx(const RegressionWeights& w, std::span<const std::size_t> counts) {
  if (counts.size() != w.size())
    throw Error(ErrorCode::DimensionMismatch, "V_N needs one count per regression octave");
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) throw Error(ErrorCode::InsufficientCoefficients, "V_N needs positive counts");
    acc += w.w[i] * w.w[i] / static_cast<double>(counts[i]);
  }
  const double log2e = std::numbers::log2e;
  return log2e * log2e / 2.0 * acc;
}

Eigen::VectorXd mahalanobis_samples(const Eigen::MatrixXd& est) {
  const auto n = est.rows();
  const auto m = est.cols();
  if (n <= m)
    throw Error(ErrorCode::SingularCovariance,
                std::to_string(n) + " realizations cannot give an invertible " + std::to_string(m) + "x" +
                    std::to_string(m) + " covariance");
  const Eigen::RowVectorXd mean = est.colwise().mean();
  const Eigen::MatrixXd centered = est.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd ev = solver.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 0.0)))
    throw Error(ErrorCode::SingularCovariance, "estimate covariance is singular");
  // Whitened coordinates: distance = |Lambda^{-1/2} U^T (x - mean)|^2.
  const Eigen::MatrixXd whitened =
      centered * solver.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal();
  return whitened.rowwise().squaredNorm();
}

double chi2_quantile(int dof, double p) {
  if (dof < 1) throw Error(ErrorCode::InvalidArgument, "chi-square needs dof >= 1");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::BadProbability, "probability must lie in (0, 1)");
  const double a = dof / 2.0;
  const auto cdf = [a](double x) { return boost::math::gamma_p(a, x / 2.0); };
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  // Newton steps, falling back to bisection whenever a step leaves the bracket.
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = cdf(x) - p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x;
    else hi = x;
    const double pdf = boost::math::gamma_p_derivative(a, x / 2.0) / 2.0;
    double next = pdf > 0.0 ? x - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-13 * std::max(1.0, x) || hi - lo < 1e-13 * std::max(1.0, x)) return next;
    x = next;
  }
  return x;
}

std::vector<double> chi2_quantiles(int dof, std::span<const double> probs) {
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(chi2_quantile(dof, p));
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "correlation needs equal-length samples");
  if (x.size() < 2) throw Error(ErrorCode::SampleTooSmall, "correlation needs at least 2 points");
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::VectorXd> vx(x.data(), n);
  const Eigen::Map<const Eigen::VectorXd> vy(y.data(), n);
  const Eigen::VectorXd cx = vx.array() - vx.mean();
  const Eigen::VectorXd cy = vy.array() - vy.mean();
  const double sxx = cx.squaredNorm();
  const double syy = cy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "correlation of a constant sample");
  return cx.dot(cy) / std::sqrt(sxx * syy);
}

QqPairs chi2_qq(std::span<const double> distances, int dof) {
  if (distances.empty()) throw Error(ErrorCode::EmptySample, "no distances");
  QqPairs out;
  out.empirical.assign(distances.begin(), distances.end());
  std::sort(out.empirical.begin(), out.empirical.end());
  const double n = static_cast<double>(distances.size());
  out.theoretical.reserve(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i)
    out.theoretical.push_back(chi2_quantile(dof, (static_cast<double>(i) + 0.5) / n));
  out.correlation = distances.size() >= 2 ? pearson(out.empirical, out.theoretical) : 1.0;
  return out;
}

Eigen::MatrixXd estimate_correlation(const Eigen::MatrixXd& est) {
  if (est.rows() < 3) throw Error(ErrorCode::SampleTooSmall, "correlation needs at least 3 realizations");
  const Eigen::MatrixXd centered = est.rowwise() - est.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index m = 0; m < sd.size(); ++m)
    if (!(sd(m) > 0.0)) throw Error(ErrorCode::ZeroVariance, "component " + std::to_string(m + 1) + " is constant");
  Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  corr = 0.5 * (corr + corr.transpose()).eval();
  corr.diagonal().setOnes();
  return corr;
}

// --- Monte Carlo ----------------------------------------------------------

namespace {

// Strips the "<Code>: " prefix so a message can be re-wrapped with context.
std::string bare_message(const Error& e) {
  const std::string what = e.what();
  const auto prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

}  // namespace

McReport run_mc(const McConfig& cfg) {
  if (cfg.n_mc < 2) throw Error(ErrorCode::SampleTooSmall, "Monte Carlo needs n_mc >= 2");
  McReport base;
  base.n = cfg.n;
  base.n_mc = cfg.n_mc;
  base.seed0 = cfg.seed0;
  const auto& h = cfg.params.hurst();
  base.h_true = Eigen::Map<const Eigen::VectorXd>(h.values.data(), static_cast<Eigen::Index>(h.size()));

  if (cfg.j1_override && cfg.j2_override) {
    base.j1 = *cfg.j1_override;
    base.j2 = *cfg.j2_override;
  } else {
    ScalingRangeConfig range = cfg.range_cfg;
    if (!range.varpi_hint) range.varpi_hint = varpi(h);
    const auto auto_range = scaling_range(cfg.n, range);
    base.j1 = cfg.j1_override.value_or(auto_range.j1);
    base.j2 = cfg.j2_override.value_or(auto_range.j2);
    base.warning = auto_range.warning;
  }
  if (base.j2 <= base.j1)
    throw Error(ErrorCode::DegenerateRange,
                "regression needs j2 > j1, got [" + std::to_string(base.j1) + ", " + std::to_string(base.j2) + "]");

  const CirculantGenerator gen(cfg.params, cfg.n);
  base.embedding = gen.report();

  const auto m = static_cast<Eigen::Index>(cfg.params.dim());
  const auto rows = static_cast<Eigen::Index>(cfg.n_mc);
  std::array<Eigen::MatrixXd, 3> estimates;
  for (auto& e : estimates) e.resize(rows, m);
  std::vector<std::size_t> counts;

  parallel_for(cfg.n_mc, cfg.threads, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seed0 + i + 1;
    try {
      const Eigen::MatrixXd path = cumulative_sum(gen.sample(seed));
      const auto pyr = dwt(path, std::nullopt, cfg.filter);
      const auto rec = estimate_all(pyr, base.j1, base.j2, cfg.balance);
      const auto r = static_cast<Eigen::Index>(i);
      estimates[0].row(r) = rec.h_u.transpose();
      estimates[1].row(r) = rec.h_m.transpose();
      estimates[2].row(r) = rec.h_m_bc.transpose();
      if (i == 0) {
        for (int j = base.j1; j <= base.j2; ++j) counts.push_back(pyr.count(j));
        base.weights = rec.weights;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "realization " + std::to_string(i + 1) + " (seed " + std::to_string(seed) +
                                "): " + bare_message(e));
    }
  });
  base.counts = std::move(counts);
  return summarize_mc(std::move(base), estimates);
}

McReport summarize_mc(McReport base, const std::array<Eigen::MatrixXd, 3>& estimates) {
  base.v_n = v_n_approx(base.weights, base.counts);
  const auto m = base.h_true.size();
  for (std::size_t e = 0; e < 3; ++e) {
    auto& s = base.estimators[e];
    s.estimates = estimates[e];
    s.perf = performance_matrices(s.estimates, base.h_true);
    s.variance = s.perf.cov.diagonal();
    s.rel_var_diff = (s.variance.array() - base.v_n) / base.v_n;
    if (s.estimates.rows() >= 3) {
      try {
        s.corr = estimate_correlation(s.estimates);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::ZeroVariance) throw;
      }
    }
    if (s.estimates.rows() > m) {
      try {
        s.mahalanobis = mahalanobis_samples(s.estimates);
        const auto qq = chi2_qq({s.mahalanobis.data(), static_cast<std::size_t>(s.mahalanobis.size())},
                                static_cast<int>(m));
        s.qq_correlation = qq.correlation;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::SingularCovariance) throw;
      }
    }
    base.spectral_norms(static_cast<Eigen::Index>(e), 0) = spectral_norm(s.perf.bias2);
    base.spectral_norms(static_cast<Eigen::Index>(e), 1) = spectral_norm(s.perf.cov);
    base.spectral_norms(static_cast<Eigen::Index>(e), 2) = spectral_norm(s.perf.mse);
  }
  return base;
}

nlohmann::json to_json(const McReport& r) {
  nlohmann::json est = nlohmann::json::object();
  for (Estimator e : kEstimators) {
    const auto& s = r.at(e);
    const auto i = static_cast<Eigen::Index>(e);
    nlohmann::json js = {{"bias2", io::to_json(s.perf.bias2)},
                         {"cov", io::to_json(s.perf.cov)},
                         {"mse", io::to_json(s.perf.mse)},
                         {"mean", io::to_json(Eigen::VectorXd(s.estimates.colwise().mean().transpose()))},
                         {"variance", io::to_json(s.variance)},
                         {"rel_var_diff", io::to_json(s.rel_var_diff)},
                         {"spectral_norms",
                          {{"bias2", r.spectral_norms(i, 0)}, {"cov", r.spectral_norms(i, 1)},
                           {"mse", r.spectral_norms(i, 2)}}}};
    js["corr"] = s.corr.size() ? io::to_json(s.corr) : nlohmann::json(nullptr);
    js["mahalanobis"] = s.mahalanobis.size() ? io::to_json(s.mahalanobis) : nlohmann::json(nullptr);
    js["qq_correlation"] = s.qq_correlation ? nlohmann::json(*s.qq_correlation) : nlohmann::json(nullptr);
    est[to_string(e)] = std::move(js);
  }
  nlohmann::json out = {{"N", r.n},
                        {"n_mc", r.n_mc},
                        {"seed0", r.seed0},
                        {"j1", r.j1},
                        {"j2", r.j2},
                        {"counts", r.counts},
                        {"weights", r.weights.w},
                        {"H_true", io::to_json(r.h_true)},
                        {"v_n", r.v_n},
                        {"embedding", to_json(r.embedding)},
                        {"estimators", std::move(est)}};
  out["warning"] = r.warning ? nlohmann::json(*r.warning) : nlohmann::json(nullptr);
  return out;
}

std::string estimates_csv(const McReport& r) {
  std::string out = "r,estimator,m,value\n";
  for (Estimator e : kEstimators) {
    const auto& est = r.at(e).estimates;
    for (Eigen::Index i = 0; i < est.rows(); ++i)
      for (Eigen::Index m = 0; m < est.cols(); ++m)
        out += std::to_string(i + 1) + ',' + to_string(e) + ',' + std::to_string(m + 1) + ',' +
               io::format_double(est(i, m)) + '\n';
  }
  return out;
}

std::string qq_csv(const McReport& r) {
  std::string out = "estimator,i,empirical,theoretical\n";
  for (Estimator e : kEstimators) {
    const auto& d = r.at(e).mahalanobis;
    if (d.size() == 0) continue;
    const auto qq = chi2_qq({d.data(), static_cast<std::size_t>(d.size())}, static_cast<int>(r.h_true.size()));
    for (std::size_t i = 0; i < qq.empirical.size(); ++i)
      out += to_string(e) + ',' + std::to_string(i + 1) + ',' + io::format_double(qq.empirical[i]) + ',' +
             io::format_double(qq.theoretical[i]) + '\n';
  }
  return out;
}

std::string norms_csv(const McReport& r) {
  std::string out = "log2N,estimator,bias2,cov,mse\n";
  const std::string log2n = io::format_double(std::log2(static_cast<double>(r.n)));
  for (Estimator e : kEstimators) {
    const auto i = static_cast<Eigen::Index>(e);
    out += log2n + ',' + to_string(e) + ',' + io::format_double(r.spectral_norms(i, 0)) + ',' +
           io::format_double(r.spectral_norms(i, 1)) + ',' + io::format_double(r.spectral_norms(i, 2)) + '\n';
  }
  return out;
}

std::string corr_csv(const McReport& r) {
  std::string out = "estimator,m,m2,corr\n";
  for (Estimator e : kEstimators) {
    const auto& c = r.at(e).corr;
    for (Eigen::Index a = 0; a < c.rows(); ++a)
      for (Eigen::Index b = 0; b < c.cols(); ++b)
        out += to_string(e) + ',' + std::to_string(a + 1) + ',' + std::to_string(b + 1) + ',' +
               io::format_double(c(a, b)) + '\n';
  }
  return out;
}

}  // namespace ofbm
