#include "ofbm/synthesis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>

#include <fftw3.h>

#include "ofbm/error.hpp"
#include "ofbm/io.hpp"
#include "ofbm/parallel.hpp"
#include "ofbm/rng.hpp"

namespace ofbm {

namespace {

// The FFTW planner is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t count)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * std::max<std::size_t>(count, 1)))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* data;
};

constexpr std::size_t kMaxEmbedding = std::size_t{1} << 24;

}  // namespace

struct FftPlan {
  FftPlan(std::size_t length, std::size_t howmany, int sign) : length(length), howmany(howmany) {
    FftwBuffer in(length * howmany);
    FftwBuffer out(length * howmany);
    const int n = static_cast<int>(length);
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_many_dft(1, &n, static_cast<int>(howmany), in.data, nullptr, 1, n, out.data, nullptr, 1, n,
                              sign, FFTW_ESTIMATE);
    if (plan == nullptr) throw Error(ErrorCode::EmbeddingFailed, "FFT planning failed");
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan, in, out); }

  std::size_t length;
  std::size_t howmany;
  fftw_plan plan = nullptr;
};

std::string to_string(PathKind kind) { return kind == PathKind::Mfbm ? "mfBm" : "mfGn"; }

nlohmann::json to_json(const EmbeddingReport& r) {
  return {{"embedding_size", r.embedding_size},
          {"min_spectral_eigenvalue", r.min_spectral_eigenvalue},
          {"clipped_mass", r.clipped_mass}};
}

double mfgn_cross_covariance(const ModelParams& p, std::size_t m, std::size_t m2, long long k) {
  if (m >= p.dim() || m2 >= p.dim())
    throw Error(ErrorCode::IndexOutOfRange, "component index outside [0, " + std::to_string(p.dim()) + ")");
  const double h = p.hurst()[m] + p.hurst()[m2];
  const double ak = std::abs(static_cast<double>(k));
  const double second_diff = std::pow(std::abs(ak - 1.0), h) - 2.0 * std::pow(ak, h) + std::pow(ak + 1.0, h);
  return 0.5 * p.sigma()(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m2)) * second_diff;
}

Eigen::MatrixXd mfgn_covariance(const ModelParams& p, long long k) {
  const auto m = static_cast<Eigen::Index>(p.dim());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      g(a, b) = mfgn_cross_covariance(p, static_cast<std::size_t>(a), static_cast<std::size_t>(b), k);
  return g;
}

Eigen::MatrixXd mixed_mfgn_covariance(const ModelParams& p, long long k) {
  const auto& w = p.mixing().entries;
  return w * mfgn_covariance(p, k) * w.transpose();
}

CirculantGenerator::CirculantGenerator(ModelParams params, std::size_t n, double clip_tolerance)
    : params_(std::move(params)), n_(n), dim_(params_.dim()) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "synthesis needs n >= 2");
  const auto m = static_cast<Eigen::Index>(dim_);
  const std::size_t pairs = dim_ * (dim_ + 1) / 2;
  const std::size_t size_limit = std::min(kMaxEmbedding, n << 16);

  std::size_t length = std::bit_ceil(std::max<std::size_t>(2 * (n - 1), 2));
  std::vector<double> eigvals;
  std::vector<double> eigvecs;
  double min_eig = 0.0;
  for (;;) {
    // Spectral matrices: DFT of the symmetric circulant first row, one pair at a time.
    FftwBuffer in(length * pairs);
    FftwBuffer out(length * pairs);
    std::size_t pair = 0;
    for (std::size_t a = 0; a < dim_; ++a) {
      for (std::size_t b = a; b < dim_; ++b, ++pair) {
        fftw_complex* row = in.data + pair * length;
        for (std::size_t k = 0; k < length; ++k) {
          const auto lag = static_cast<long long>(k <= length / 2 ? k : length - k);
          row[k][0] = mfgn_cross_covariance(params_, a, b, lag);
          row[k][1] = 0.0;
        }
      }
    }
    FftPlan(length, pairs, FFTW_FORWARD).execute(in.data, out.data);

    eigvals.assign(length * dim_, 0.0);
    eigvecs.assign(length * dim_ * dim_, 0.0);
    min_eig = std::numeric_limits<double>::infinity();
    double max_eig = 0.0;
    Eigen::MatrixXd spec(m, m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (std::size_t f = 0; f < length; ++f) {
      pair = 0;
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = a; b < m; ++b, ++pair) spec(a, b) = spec(b, a) = out.data[pair * length + f][0];
      es.compute(spec);
      for (Eigen::Index i = 0; i < m; ++i) {
        const double lambda = es.eigenvalues()(i);
        eigvals[f * dim_ + static_cast<std::size_t>(i)] = lambda;
        min_eig = std::min(min_eig, lambda);
        max_eig = std::max(max_eig, lambda);
      }
      std::memcpy(eigvecs.data() + f * dim_ * dim_, es.eigenvectors().data(), sizeof(double) * dim_ * dim_);
    }
    // Round-off level negatives are not a reason to enlarge the embedding.
    if (min_eig >= -1e-12 * max_eig || 2 * length > size_limit) break;
    length *= 2;
  }

  double clipped = 0.0;
  double total = 0.0;
  for (double& lambda : eigvals) {
    total += std::abs(lambda);
    if (lambda < 0.0) {
      clipped += -lambda;
      lambda = 0.0;
    }
  }
  report_.embedding_size = length;
  report_.min_spectral_eigenvalue = min_eig;
  report_.clipped_mass = total > 0.0 ? clipped / total : 0.0;
  if (report_.clipped_mass > clip_tolerance) {
    throw Error(ErrorCode::EmbeddingFailed, "circulant embedding of size " + std::to_string(length) +
                                                " clips " + std::to_string(report_.clipped_mass) +
                                                " of the spectral mass");
  }

  factors_.assign(length * dim_ * dim_, 0.0);
  for (std::size_t f = 0; f < length; ++f) {
    Eigen::Map<const Eigen::MatrixXd> u(eigvecs.data() + f * dim_ * dim_, m, m);
    Eigen::Map<Eigen::MatrixXd> r(factors_.data() + f * dim_ * dim_, m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      r.col(i) = u.col(i) * std::sqrt(eigvals[f * dim_ + static_cast<std::size_t>(i)]);
  }
  plan_ = std::make_unique<FftPlan>(length, dim_, FFTW_BACKWARD);
}

CirculantGenerator::~CirculantGenerator() = default;
CirculantGenerator::CirculantGenerator(CirculantGenerator&&) noexcept = default;
CirculantGenerator& CirculantGenerator::operator=(CirculantGenerator&&) noexcept = default;

Eigen::MatrixXd CirculantGenerator::spectral_factor(std::size_t f) const {
  if (f >= report_.embedding_size) throw Error(ErrorCode::IndexOutOfRange, "frequency index out of range");
  const auto m = static_cast<Eigen::Index>(dim_);
  return Eigen::Map<const Eigen::MatrixXd>(factors_.data() + f * dim_ * dim_, m, m);
}

Eigen::MatrixXd CirculantGenerator::sample(std::uint64_t seed) const {
  const std::size_t length = report_.embedding_size;
  const auto m = static_cast<Eigen::Index>(dim_);
  FftwBuffer in(length * dim_);
  FftwBuffer out(length * dim_);
  GaussianStream rng(seed);
  Eigen::VectorXd re(m);
  Eigen::VectorXd im(m);
  for (std::size_t f = 0; f < length; ++f) {
    for (Eigen::Index i = 0; i < m; ++i) re(i) = rng.next_normal();
    for (Eigen::Index i = 0; i < m; ++i) im(i) = rng.next_normal();
    Eigen::Map<const Eigen::MatrixXd> r(factors_.data() + f * dim_ * dim_, m, m);
    const Eigen::VectorXd vr = r * re;
    const Eigen::VectorXd vi = r * im;
    for (Eigen::Index i = 0; i < m; ++i) {
      in.data[static_cast<std::size_t>(i) * length + f][0] = vr(i);
      in.data[static_cast<std::size_t>(i) * length + f][1] = vi(i);
    }
  }
  plan_->execute(in.data, out.data);

  const double scale = 1.0 / std::sqrt(static_cast<double>(length));
  Eigen::MatrixXd pre(m, static_cast<Eigen::Index>(n_));
  for (Eigen::Index i = 0; i < m; ++i)
    for (std::size_t t = 0; t < n_; ++t)
      pre(i, static_cast<Eigen::Index>(t)) = out.data[static_cast<std::size_t>(i) * length + t][0] * scale;
  return params_.mixing().entries * pre;
}

SamplePath CirculantGenerator::mfgn(std::uint64_t seed) const {
  return SamplePath{sample(seed), params_, seed, PathKind::Mfgn};
}

SamplePath CirculantGenerator::mfbm(std::uint64_t seed) const {
  return SamplePath{cumulative_sum(sample(seed)), params_, seed, PathKind::Mfbm};
}

Eigen::MatrixXd cumulative_sum(const Eigen::MatrixXd& increments) {
  Eigen::MatrixXd path(increments.rows(), increments.cols());
  for (Eigen::Index i = 0; i < increments.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < increments.cols(); ++t) {
      acc += increments(i, t);
      path(i, t) = acc;
    }
  }
  return path;
}

SynthesisResult synthesize_mfgn(const ModelParams& p, std::size_t n, std::uint64_t seed) {
  CirculantGenerator gen(p, n);
  return SynthesisResult{gen.mfgn(seed), gen.report()};
}

SamplePath synthesize_mfbm(const ModelParams& p, std::size_t n, std::uint64_t seed) {
  return CirculantGenerator(p, n).mfbm(seed);
}

std::vector<SamplePath> synthesize_batch(const CirculantGenerator& gen, std::span<const std::uint64_t> seeds,
                                         PathKind kind, unsigned threads) {
  std::vector<Eigen::MatrixXd> data(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    data[i] = kind == PathKind::Mfbm ? cumulative_sum(gen.sample(seeds[i])) : gen.sample(seeds[i]);
  });
  std::vector<SamplePath> out;
  out.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    out.push_back(SamplePath{std::move(data[i]), gen.params(), seeds[i], kind});
  return out;
}

// --- file formats -----------------------------------------------------------

std::string sample_path_csv(const Eigen::MatrixXd& data) {
  std::string out = "t";
  for (Eigen::Index i = 0; i < data.rows(); ++i) out += ",c" + std::to_string(i + 1);
  out += '\n';
  for (Eigen::Index t = 0; t < data.cols(); ++t) {
    out += std::to_string(t);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      out += ',';
      out += io::format_double(data(i, t));
    }
    out += '\n';
  }
  return out;
}

std::vector<char> sample_path_binary(const Eigen::MatrixXd& data) {
  static_assert(std::endian::native == std::endian::little, "binary output assumes a little-endian host");
  std::vector<char> bytes(static_cast<std::size_t>(data.size()) * sizeof(double));
  std::size_t offset = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index t = 0; t < data.cols(); ++t) {
      const double v = data(i, t);
      std::memcpy(bytes.data() + offset, &v, sizeof(double));
      offset += sizeof(double);
    }
  }
  return bytes;
}

nlohmann::json sample_path_sidecar(const SamplePath& path) {
  return {{"M", path.data.rows()},
          {"N", path.data.cols()},
          {"seed", path.seed},
          {"kind", to_string(path.kind)},
          {"params", to_json(path.params)},
          {"rng", std::string(GaussianStream::kAlgorithm)}};
}

Series parse_series_csv(const std::string& text, const std::string& label_column) {
  const auto table = io::parse_csv(text);
  if (table.header.empty()) throw Error(ErrorCode::Parse, "empty CSV");
  const int label_idx = label_column.empty() ? -1 : table.column(label_column);
  if (!label_column.empty() && label_idx < 0)
    throw Error(ErrorCode::Parse, "label column '" + label_column + "' not found");

  std::vector<int> value_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<int>(c) == label_idx) continue;
    if (c == 0 && table.header[c] == "t") continue;
    value_cols.push_back(static_cast<int>(c));
  }
  if (value_cols.empty()) throw Error(ErrorCode::Parse, "CSV has no data columns");

  Series s;
  s.data.resize(static_cast<Eigen::Index>(value_cols.size()), static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t i = 0; i < value_cols.size(); ++i)
      s.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) =
          io::parse_double(table.rows[r][static_cast<std::size_t>(value_cols[i])]);
    if (label_idx >= 0) s.labels.push_back(table.rows[r][static_cast<std::size_t>(label_idx)]);
  }
  return s;
}

Eigen::MatrixXd parse_series_binary(std::span<const char> bytes, const nlohmann::json& sidecar) {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  try {
    m = sidecar.at("M").get<Eigen::Index>();
    n = sidecar.at("N").get<Eigen::Index>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("sidecar: ") + e.what());
  }
  if (m < 1 || n < 0 || bytes.size() != static_cast<std::size_t>(m * n) * sizeof(double))
    throw Error(ErrorCode::DimensionMismatch, "binary payload does not match sidecar dimensions");
  Eigen::MatrixXd data(m, n);
  std::size_t offset = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index t = 0; t < n; ++t) {
      double v = 0.0;
      std::memcpy(&v, bytes.data() + offset, sizeof(double));
      data(i, t) = v;
      offset += sizeof(double);
    }
  }
  return data;
}

Series load_series(const std::filesystem::path& path, const std::string& label_column) {
  if (path.extension() == ".bin") {
    auto sidecar_path = path;
    sidecar_path.replace_extension(".json");
    const auto bytes = io::read_file(path);
    nlohmann::json sidecar;
    try {
      sidecar = nlohmann::json::parse(io::read_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, sidecar_path.string() + ": " + e.what());
    }
    return Series{parse_series_binary(std::span<const char>(bytes.data(), bytes.size()), sidecar), {}};
  }
  return parse_series_csv(io::read_file(path), label_column);
}

}  // namespace ofbm
