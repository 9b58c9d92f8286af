#include "ofbm/wavelet.hpp"

#include <cmath>
#include <cstring>

#include "ofbm/error.hpp"
#include "ofbm/io.hpp"

namespace ofbm {

namespace {

// Daubechies lowpass taps, sum = sqrt(2).
const std::vector<double> kHaar = {0.70710678118654752440, 0.70710678118654752440};
const std::vector<double> kDb3 = {0.33267055295008261600, 0.80689150931109257650, 0.45987750211849157010,
                                  -0.13501102001025458870, -0.08544127388202666169, 0.03522629188570953660};

std::vector<double> db2_taps() {
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * std::sqrt(2.0);
  return {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
}

}  // namespace

WaveletFilter WaveletFilter::from_lowpass(std::string name, int n_vanishing, std::vector<double> lowpass) {
  const std::size_t len = lowpass.size();
  if (len < 2 || len % 2 != 0) throw Error(ErrorCode::BadFilter, name + ": filter length must be even and >= 2");
  if (n_vanishing < 1) throw Error(ErrorCode::BadFilter, name + ": needs at least one vanishing moment");

  for (std::size_t shift = 0; shift < len; shift += 2) {
    double acc = 0.0;
    for (std::size_t k = 0; k + shift < len; ++k) acc += lowpass[k] * lowpass[k + shift];
    const double expected = shift == 0 ? 1.0 : 0.0;
    if (std::abs(acc - expected) > 1e-12) throw Error(ErrorCode::BadFilter, name + ": lowpass is not orthonormal");
  }

  std::vector<double> highpass(len);
  for (std::size_t k = 0; k < len; ++k) highpass[k] = (k % 2 == 0 ? 1.0 : -1.0) * lowpass[len - 1 - k];

  for (int p = 0; p < n_vanishing; ++p) {
    double moment = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double kp = std::pow(static_cast<double>(k), p);
      moment += kp * highpass[k];
      scale += kp * std::abs(highpass[k]);
    }
    if (std::abs(moment) > 1e-10 * scale)
      throw Error(ErrorCode::BadFilter, name + ": vanishing moment " + std::to_string(p) + " does not vanish");
  }
  return WaveletFilter{std::move(name), n_vanishing, std::move(lowpass), std::move(highpass)};
}

WaveletFilter WaveletFilter::daubechies(int n_vanishing) {
  switch (n_vanishing) {
    case 1: return from_lowpass("db1", 1, kHaar);
    case 2: return from_lowpass("db2", 2, db2_taps());
    case 3: return from_lowpass("db3", 3, kDb3);
    default: throw Error(ErrorCode::BadFilter, "built-in Daubechies filters cover 1 to 3 vanishing moments");
  }
}

WaveletFilter WaveletFilter::by_name(std::string_view name) {
  if (name == "haar" || name == "db1") return daubechies(1);
  if (name == "db2" || name == "sym2") return daubechies(2);
  if (name == "db3") return daubechies(3);
  throw Error(ErrorCode::BadFilter, "unknown filter '" + std::string(name) + "'");
}

std::vector<std::string> available_filters() { return {"db1", "haar", "db2", "sym2", "db3"}; }

std::uint64_t filter_taps_hash() {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int nv = 1; nv <= 3; ++nv) {
    for (double tap : WaveletFilter::daubechies(nv).lowpass) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &tap, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

std::vector<std::size_t> coefficient_counts(std::size_t n, std::size_t filter_length, int j_max) {
  std::vector<std::size_t> counts;
  std::size_t prev = n;
  for (int j = 1; j <= j_max; ++j) {
    if (prev + 1 < filter_length + 2) break;  // floor((prev - L + 1) / 2) < 1
    const std::size_t nj = (prev + 1 - filter_length) / 2;
    counts.push_back(nj);
    prev = nj;
  }
  return counts;
}

WaveletPyramid::WaveletPyramid(std::vector<Eigen::MatrixXd> details, WaveletFilter filter, std::size_t source_length)
    : details_(std::move(details)), filter_(std::move(filter)), source_length_(source_length) {}

std::size_t WaveletPyramid::dim() const noexcept {
  return details_.empty() ? 0 : static_cast<std::size_t>(details_.front().rows());
}

const Eigen::MatrixXd& WaveletPyramid::details(int j) const {
  if (j < 1 || j > max_scale())
    throw Error(ErrorCode::ScaleUnavailable,
                "octave " + std::to_string(j) + " outside [1, " + std::to_string(max_scale()) + "]");
  return details_[static_cast<std::size_t>(j - 1)];
}

std::size_t WaveletPyramid::count(int j) const { return static_cast<std::size_t>(details(j).cols()); }

WaveletPyramid dwt(const Eigen::MatrixXd& x, std::optional<int> j_max, const WaveletFilter& f) {
  const std::size_t len = f.length();
  if (len < 2 || f.highpass.size() != len) throw Error(ErrorCode::BadFilter, "malformed filter");
  if (x.rows() < 1) throw Error(ErrorCode::SeriesTooShort, "no components");
  const auto n = static_cast<std::size_t>(x.cols());
  const auto counts = coefficient_counts(n, len, j_max.value_or(64));
  if (counts.empty() || (j_max && static_cast<int>(counts.size()) < *j_max)) {
    throw Error(ErrorCode::SeriesTooShort, "series of length " + std::to_string(n) + " cannot reach octave " +
                                               std::to_string(j_max.value_or(1)) + " with a " +
                                               std::to_string(len) + "-tap filter");
  }

  const auto rows = x.rows();
  const auto l = static_cast<Eigen::Index>(len);
  std::vector<Eigen::MatrixXd> details;
  details.reserve(counts.size());
  Eigen::MatrixXd approx = x;
  for (std::size_t level = 0; level < counts.size(); ++level) {
    const auto nj = static_cast<Eigen::Index>(counts[level]);
    Eigen::MatrixXd d(rows, nj);
    Eigen::MatrixXd a(rows, nj);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index k = 0; k < nj; ++k) {
        // Odd phase of the valid part of the full convolution.
        const Eigen::Index base = l + 2 * k;
        double hi = 0.0;
        double lo = 0.0;
        for (Eigen::Index t = 0; t < l; ++t) {
          const double v = approx(r, base - t);
          hi += f.highpass[static_cast<std::size_t>(t)] * v;
          lo += f.lowpass[static_cast<std::size_t>(t)] * v;
        }
        d(r, k) = hi;
        a(r, k) = lo;
      }
    }
    details.push_back(std::move(d));
    approx = std::move(a);
  }
  return WaveletPyramid(std::move(details), f, n);
}

namespace {

Eigen::MatrixXd outer_average(const Eigen::MatrixXd& d, Eigen::Index first, Eigen::Index count) {
  const auto block = d.middleCols(first, count);
  Eigen::MatrixXd s = (block * block.transpose()) / static_cast<double>(count);
  return 0.5 * (s + s.transpose());
}

}  // namespace

Eigen::MatrixXd wavelet_spectrum(const WaveletPyramid& p, int j) {
  const auto& d = p.details(j);
  if (d.cols() < 1) throw Error(ErrorCode::ScaleUnavailable, "no coefficients at octave " + std::to_string(j));
  return outer_average(d, 0, d.cols());
}

const Eigen::MatrixXd& WaveletSpectrumSet::at(int j) const {
  for (std::size_t i = 0; i < scales.size(); ++i)
    if (scales[i] == j) return spectra[i];
  throw Error(ErrorCode::ScaleUnavailable, "spectrum set has no octave " + std::to_string(j));
}

std::size_t WaveletSpectrumSet::count_at(int j) const {
  for (std::size_t i = 0; i < scales.size(); ++i)
    if (scales[i] == j) return counts[i];
  throw Error(ErrorCode::ScaleUnavailable, "spectrum set has no octave " + std::to_string(j));
}

bool WaveletSpectrumSet::has(int j) const noexcept {
  for (int s : scales)
    if (s == j) return true;
  return false;
}

WaveletSpectrumSet spectrum_set(const WaveletPyramid& p, int j_lo, int j_hi) {
  WaveletSpectrumSet out;
  for (int j = j_lo; j <= j_hi; ++j) {
    out.scales.push_back(j);
    out.spectra.push_back(wavelet_spectrum(p, j));
    out.counts.push_back(p.count(j));
  }
  return out;
}

std::vector<Eigen::MatrixXd> windowed_spectra(const WaveletPyramid& p, int j, int j2) {
  if (j > j2) throw Error(ErrorCode::ScaleUnavailable, "windowed spectra need j <= j2");
  const auto& d = p.details(j);
  const std::size_t window = p.count(j2);
  if (window < p.dim()) {
    throw Error(ErrorCode::WindowTooSmall, "n_j2 = " + std::to_string(window) + " coefficients per window, fewer than " +
                                               std::to_string(p.dim()) + " components");
  }
  const std::size_t windows = std::size_t{1} << (j2 - j);
  if (static_cast<std::size_t>(d.cols()) < windows * window) {
    throw Error(ErrorCode::InsufficientCoefficients, "octave " + std::to_string(j) + " has " +
                                                         std::to_string(d.cols()) + " coefficients, needs " +
                                                         std::to_string(windows * window));
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(windows);
  for (std::size_t tau = 0; tau < windows; ++tau)
    out.push_back(outer_average(d, static_cast<Eigen::Index>(tau * window), static_cast<Eigen::Index>(window)));
  return out;
}

WindowedSpectrumSet windowed_spectrum_set(const WaveletPyramid& p, int j_lo, int j2) {
  WindowedSpectrumSet out;
  out.j2 = j2;
  for (int j = j_lo; j <= j2; ++j) {
    out.scales.push_back(j);
    out.windows.push_back(windowed_spectra(p, j, j2));
  }
  return out;
}

std::string spectra_csv(const WaveletSpectrumSet& s) {
  std::string out = "j,m,m2,S,n_j\n";
  for (std::size_t i = 0; i < s.scales.size(); ++i) {
    const auto& sp = s.spectra[i];
    for (Eigen::Index a = 0; a < sp.rows(); ++a) {
      for (Eigen::Index b = 0; b < sp.cols(); ++b) {
        out += std::to_string(s.scales[i]) + ',' + std::to_string(a + 1) + ',' + std::to_string(b + 1) + ',' +
               io::format_double(sp(a, b)) + ',' + std::to_string(s.counts[i]) + '\n';
      }
    }
  }
  return out;
}

std::vector<char> pyramid_binary(const WaveletPyramid& p) {
  std::vector<char> bytes;
  for (int j = 1; j <= p.max_scale(); ++j) {
    const auto& d = p.details(j);
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      for (Eigen::Index k = 0; k < d.cols(); ++k) {
        const double v = d(r, k);
        const auto* raw = reinterpret_cast<const char*>(&v);
        bytes.insert(bytes.end(), raw, raw + sizeof(double));
      }
    }
  }
  return bytes;
}

nlohmann::json pyramid_sidecar(const WaveletPyramid& p) {
  auto counts = nlohmann::json::array();
  for (int j = 1; j <= p.max_scale(); ++j) counts.push_back({{"j", j}, {"n_j", p.count(j)}});
  return {{"M", p.dim()},
          {"N", p.source_length()},
          {"filter", p.filter().name},
          {"taps", p.filter().lowpass},
          {"scales", std::move(counts)}};
}

}  // namespace ofbm
