#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ofbm/model.hpp"

namespace ofbm {

enum class PathKind { Mfgn, Mfbm };

std::string to_string(PathKind kind);

struct EmbeddingReport {
  std::size_t embedding_size = 0;
  double min_spectral_eigenvalue = 0.0;
  double clipped_mass = 0.0;
};

nlohmann::json to_json(const EmbeddingReport& r);

/// An M x N realization. For Mfbm the path is the running sum of an mfGn path
/// with no leading zero: B(t_i) = sum_{u <= i} X(u).
struct SamplePath {
  Eigen::MatrixXd data;
  ModelParams params;
  std::uint64_t seed = 0;
  PathKind kind = PathKind::Mfgn;
};

/// Pre-mixing lag-k covariance of the increments of components m and m2:
/// (Sigma_{m m2} / 2) (|k-1|^h - 2|k|^h + |k+1|^h), h = H_m + H_m2.
double mfgn_cross_covariance(const ModelParams& p, std::size_t m, std::size_t m2, long long k);

/// Full pre-mixing Gamma(k).
Eigen::MatrixXd mfgn_covariance(const ModelParams& p, long long k);

/// W Gamma(k) W^T, the covariance of the synthesized (mixed) mfGn.
Eigen::MatrixXd mixed_mfgn_covariance(const ModelParams& p, long long k);

struct FftPlan;

/// Circulant-embedding generator for a fixed (params, n). Construction does the
/// expensive work (spectral matrices, per-frequency square roots); sampling is
/// const and safe to call from several threads.
class CirculantGenerator {
 public:
  static constexpr double kDefaultClipTolerance = 1e-6;

  CirculantGenerator(ModelParams params, std::size_t n, double clip_tolerance = kDefaultClipTolerance);
  ~CirculantGenerator();
  CirculantGenerator(CirculantGenerator&&) noexcept;
  CirculantGenerator& operator=(CirculantGenerator&&) noexcept;

  [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t length() const noexcept { return n_; }
  [[nodiscard]] const EmbeddingReport& report() const noexcept { return report_; }

  /// R_f with R_f R_f^T equal to the (clipped) pre-mixing spectral matrix at frequency f.
  [[nodiscard]] Eigen::MatrixXd spectral_factor(std::size_t f) const;

  /// Mixed mfGn samples, M x n.
  [[nodiscard]] Eigen::MatrixXd sample(std::uint64_t seed) const;

  [[nodiscard]] SamplePath mfgn(std::uint64_t seed) const;
  [[nodiscard]] SamplePath mfbm(std::uint64_t seed) const;

 private:
  ModelParams params_;
  std::size_t n_;
  std::size_t dim_;
  EmbeddingReport report_;
  std::vector<double> factors_;  // L blocks of M x M, column-major
  std::unique_ptr<FftPlan> plan_;
};

struct SynthesisResult {
  SamplePath path;
  EmbeddingReport report;
};

SynthesisResult synthesize_mfgn(const ModelParams& p, std::size_t n, std::uint64_t seed);
SamplePath synthesize_mfbm(const ModelParams& p, std::size_t n, std::uint64_t seed);

/// One path per seed; output order follows `seeds` whatever the thread count.
std::vector<SamplePath> synthesize_batch(const CirculantGenerator& gen, std::span<const std::uint64_t> seeds,
                                         PathKind kind, unsigned threads);

Eigen::MatrixXd cumulative_sum(const Eigen::MatrixXd& increments);

// --- file formats -----------------------------------------------------------

/// Header `t,c1..cM`, one row per time index.
std::string sample_path_csv(const Eigen::MatrixXd& data);

/// Raw little-endian float64, component-contiguous.
std::vector<char> sample_path_binary(const Eigen::MatrixXd& data);
nlohmann::json sample_path_sidecar(const SamplePath& path);

struct Series {
  Eigen::MatrixXd data;             // M x N
  std::vector<std::string> labels;  // per sample; empty unless a label column was requested
};

/// Reads a numeric CSV. A leading `t` column is dropped; `label_column`, when
/// non-empty, is extracted as per-sample labels instead of data.
Series parse_series_csv(const std::string& text, const std::string& label_column = {});
Eigen::MatrixXd parse_series_binary(std::span<const char> bytes, const nlohmann::json& sidecar);

/// Loads `path` as CSV, or as raw binary when a `<path>.json` sidecar exists
/// next to a `.bin` file.
Series load_series(const std::filesystem::path& path, const std::string& label_column = {});

}  // namespace ofbm
