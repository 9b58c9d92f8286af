#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ofbm {

/// Orthonormal two-channel filter pair. highpass_k = (-1)^k lowpass_{L-1-k}.
struct WaveletFilter {
  std::string name;
  int n_vanishing = 0;
  std::vector<double> lowpass;
  std::vector<double> highpass;

  [[nodiscard]] std::size_t length() const noexcept { return lowpass.size(); }

  /// Validates orthonormality and the claimed vanishing moments (BadFilter otherwise).
  static WaveletFilter from_lowpass(std::string name, int n_vanishing, std::vector<double> lowpass);

  /// Daubechies minimal-phase family, n_vanishing in {1, 2, 3}. For two
  /// vanishing moments this is also the least asymmetric member.
  static WaveletFilter daubechies(int n_vanishing);

  /// "haar"/"db1", "db2"/"sym2", "db3".
  static WaveletFilter by_name(std::string_view name);

  static WaveletFilter default_filter() { return daubechies(2); }
};

std::vector<std::string> available_filters();

/// FNV-1a over the bytes of every built-in filter's taps.
std::uint64_t filter_taps_hash();

/// n_j for j = 1.. while n_j >= 1 (at most j_max levels): n_j = floor((n_{j-1} - L + 1) / 2).
std::vector<std::size_t> coefficient_counts(std::size_t n, std::size_t filter_length, int j_max = 64);

/// Detail coefficients per octave, M x n_j each.
class WaveletPyramid {
 public:
  WaveletPyramid(std::vector<Eigen::MatrixXd> details, WaveletFilter filter, std::size_t source_length);

  [[nodiscard]] int max_scale() const noexcept { return static_cast<int>(details_.size()); }
  [[nodiscard]] std::size_t dim() const noexcept;
  [[nodiscard]] std::size_t count(int j) const;
  [[nodiscard]] const Eigen::MatrixXd& details(int j) const;
  [[nodiscard]] const WaveletFilter& filter() const noexcept { return filter_; }
  [[nodiscard]] std::size_t source_length() const noexcept { return source_length_; }

 private:
  std::vector<Eigen::MatrixXd> details_;
  WaveletFilter filter_;
  std::size_t source_length_;
};

/// Pyramid algorithm on each row of `x` (M x N), valid-support convolution and
/// dyadic decimation. Without `j_max` the decomposition runs while n_j >= 1.
WaveletPyramid dwt(const Eigen::MatrixXd& x, std::optional<int> j_max, const WaveletFilter& f);

/// S(2^j) = (1/n_j) sum_k D(2^j, k) D(2^j, k)^T.
Eigen::MatrixXd wavelet_spectrum(const WaveletPyramid& p, int j);

struct WaveletSpectrumSet {
  std::vector<int> scales;
  std::vector<Eigen::MatrixXd> spectra;
  std::vector<std::size_t> counts;

  [[nodiscard]] const Eigen::MatrixXd& at(int j) const;
  [[nodiscard]] std::size_t count_at(int j) const;
  [[nodiscard]] bool has(int j) const noexcept;
};

WaveletSpectrumSet spectrum_set(const WaveletPyramid& p, int j_lo, int j_hi);

/// The 2^(j2-j) spectra of consecutive, non-overlapping windows of n_{j2}
/// coefficients at octave j. Trailing coefficients beyond the last full window
/// are discarded.
std::vector<Eigen::MatrixXd> windowed_spectra(const WaveletPyramid& p, int j, int j2);

struct WindowedSpectrumSet {
  int j2 = 0;
  std::vector<int> scales;
  std::vector<std::vector<Eigen::MatrixXd>> windows;
};

WindowedSpectrumSet windowed_spectrum_set(const WaveletPyramid& p, int j_lo, int j2);

/// Rows (j, m, m', S_mm'(2^j), n_j), 1-based component indices.
std::string spectra_csv(const WaveletSpectrumSet& s);

/// Component-contiguous float64 coefficients, scale after scale.
std::vector<char> pyramid_binary(const WaveletPyramid& p);
nlohmann::json pyramid_sidecar(const WaveletPyramid& p);

}  // namespace ofbm
