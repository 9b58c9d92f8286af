#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unistd.h>

#include "ofbm/model.hpp"
#include "ofbm/wavelet.hpp"

namespace ofbm::testing {

inline Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Eigen::MatrixXd corr2(double r) { return mat2(1.0, r, r, 1.0); }

// Fixed, well-conditioned non-orthogonal mixing matrices.
inline Eigen::MatrixXd mixing2() { return mat2(1.0, 0.5, -0.25, 1.0); }

inline Eigen::MatrixXd mixing4() {
  Eigen::MatrixXd w(4, 4);
  w << 1.0, 0.4, -0.2, 0.1,
       0.3, 1.0, 0.25, -0.15,
       -0.1, 0.2, 1.0, 0.35,
       0.2, -0.3, 0.15, 1.0;
  return w;
}

/// rho_{mm'} = r^{|m - m'|}.
inline Eigen::MatrixXd toeplitz_corr(int m, double r) {
  Eigen::MatrixXd c(m, m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) c(i, k) = std::pow(r, std::abs(i - k));
  return c;
}

/// Pyramid over octaves 1..j2 whose every window of n_{j2} = `window`
/// coefficients has spectrum Q diag(lambda_m(j)) Q^T exactly, with
/// lambda_m(j) = xi_m 2^{j (2 H_m + 1)}. Level j holds 2^{j2-j} windows.
inline WaveletPyramid exact_power_law_pyramid(const Eigen::VectorXd& h, const Eigen::VectorXd& xi,
                                              const Eigen::MatrixXd& q, int j2, Eigen::Index window) {
  const Eigen::Index m = h.size();
  std::vector<Eigen::MatrixXd> details;
  for (int j = 1; j <= j2; ++j) {
    const Eigen::Index windows = Eigen::Index{1} << (j2 - j);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, windows * window);
    for (Eigen::Index tau = 0; tau < windows; ++tau) {
      for (Eigen::Index c = 0; c < m; ++c) {
        const double lambda = xi(c) * std::exp2(j * (2.0 * h(c) + 1.0));
        d.col(tau * window + c) = std::sqrt(static_cast<double>(window) * lambda) * q.col(c);
      }
    }
    details.push_back(std::move(d));
  }
  const auto n = static_cast<std::size_t>(window) << (j2 + 1);
  return WaveletPyramid(std::move(details), WaveletFilter::default_filter(), n);
}

/// Orthogonal matrix from the QR factorization of a seeded Gaussian matrix.
inline Eigen::MatrixXd random_orthogonal(Eigen::Index m, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = nd(gen);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ofbm-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ofbm::testing
