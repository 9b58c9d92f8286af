#include "ofbm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "ofbm/analysis.hpp"
#include "ofbm/error.hpp"
#include "ofbm/io.hpp"
#include "ofbm/rng.hpp"

namespace fs = std::filesystem;

namespace ofbm {

namespace {

constexpr std::string_view kToolVersion = "1.0.0";

// Carries an exit code chosen at the point of failure, where the stage is known.
struct CliFailure : std::runtime_error {
  CliFailure(ExitCode c, const std::string& what) : std::runtime_error(what), code(c) {}
  ExitCode code;
};

ExitCode exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io:
    case ErrorCode::Parse:
    case ErrorCode::InvalidArgument: return ExitCode::Usage;
    case ErrorCode::HurstOutOfRange:
    case ErrorCode::HurstUnsorted:
    case ErrorCode::SingularMixing:
    case ErrorCode::CovarianceNotPSD:
    case ErrorCode::CorrelationInfeasible: return ExitCode::Model;
    default: return ExitCode::Data;
  }
}

ModelParams load_params(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw CliFailure(ExitCode::Usage, std::string(e.what()));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CliFailure(ExitCode::Usage, "Parse: " + path.string() + ": " + e.what());
  }
  try {
    return params_from_json(j);
  } catch (const Error& e) {
    const ExitCode code = e.code() == ErrorCode::Parse ? ExitCode::Usage : ExitCode::Model;
    throw CliFailure(code, path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw CliFailure(ExitCode::Usage, "Parse: " + path.string() + ": " + e.what());
  }
}

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("OFBMKIT_THREADS")) {
    const std::string s(env);
    try {
      const double v = io::parse_double(s);
      if (v >= 1.0 && v == static_cast<double>(static_cast<unsigned>(v))) return static_cast<unsigned>(v);
    } catch (const Error&) {
    }
    throw Error(ErrorCode::InvalidArgument, "OFBMKIT_THREADS must be a positive integer, got '" + s + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct RangeOptions {
  std::optional<int> j1;
  std::optional<int> j2;
  double beta = 0.9;
  std::size_t n0 = std::size_t{1} << 13;
  std::string filter = "db2";
  std::string weights = "by-count";

  void attach(CLI::App& app) {
    app.add_option("--j1", j1, "finest regression octave (overrides the automatic range)");
    app.add_option("--j2", j2, "coarsest regression octave (overrides the automatic range)");
    app.add_option("--beta", beta, "scaling-range exponent")->capture_default_str();
    app.add_option("--n0", n0, "reference sample size of the scaling range")->capture_default_str();
    app.add_option("--filter", filter, "wavelet filter: db1, haar, db2, sym2, db3")->capture_default_str();
    app.add_option("--weights", weights, "regression weights: uniform or by-count")
        ->check(CLI::IsMember({"uniform", "by-count"}))
        ->capture_default_str();
  }

  [[nodiscard]] ScalingRangeConfig config() const {
    ScalingRangeConfig cfg;
    cfg.beta = beta;
    cfg.n0 = n0;
    return cfg;
  }

  [[nodiscard]] std::pair<int, int> resolve(std::size_t n, std::ostream& err) const {
    if (j1 && j2) return {*j1, *j2};
    const auto r = scaling_range(n, config());
    if (r.warning) err << "warning: " << *r.warning << '\n';
    return {j1.value_or(r.j1), j2.value_or(r.j2)};
  }
};

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// --- synth ------------------------------------------------------------------

struct SynthOptions {
  std::string params;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string kind = "mfbm";
  std::string format = "csv";
  std::optional<std::string> out;
  std::string out_dir = ".";
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const auto params = load_params(o.params);
  const CirculantGenerator gen(params, o.n);
  const auto path = o.kind == "mfgn" ? gen.mfgn(o.seed) : gen.mfbm(o.seed);

  fs::path target = o.out ? fs::path(*o.out) : fs::path(o.out_dir) / ("path." + o.format);
  fs::path sidecar = target;
  sidecar.replace_extension(".json");
  fs::path report = target;
  report.replace_extension(".embedding.json");

  if (o.format == "bin") io::write_atomic(target, sample_path_binary(path.data));
  else io::write_atomic(target, sample_path_csv(path.data));
  io::write_atomic(sidecar, dump(sample_path_sidecar(path)));
  io::write_atomic(report, dump(to_json(gen.report())));
  out << "wrote " << target.string() << " (" << path.data.rows() << " x " << path.data.cols() << ", "
      << to_string(path.kind) << ", embedding size " << gen.report().embedding_size << ")\n";
  return 0;
}

// --- estimate ---------------------------------------------------------------

struct EstimateOptions {
  std::string input;
  bool increments = false;
  RangeOptions range;
  std::string out_dir = ".";
};

std::string cell(std::optional<double> v) { return v ? io::format_double(*v) : std::string{}; }

// Log spectra at every octave with coefficients, the bias-corrected column only inside [j1, j2].
std::string log_spectra_csv(const WaveletPyramid& pyr, const EstimateRecord& rec) {
  std::string out = "j,n_j,m,log2_S_mm,log2_lambda,log2_lambda_bc\n";
  const auto m = static_cast<Eigen::Index>(pyr.dim());
  for (int j = 1; j <= pyr.max_scale(); ++j) {
    const auto s = wavelet_spectrum(pyr, j);
    std::optional<Eigen::VectorXd> ev;
    if (pyr.count(j) >= static_cast<std::size_t>(m)) {
      Eigen::VectorXd e = sorted_eigenvalues(s);
      if (e(0) > 0.0) ev = e;
    }
    for (Eigen::Index c = 0; c < m; ++c) {
      std::optional<double> diag, eig, bc;
      if (s(c, c) > 0.0) diag = std::log2(s(c, c));
      if (ev) eig = std::log2((*ev)(c));
      if (j >= rec.j1 && j <= rec.j2) bc = rec.log_eig_bc(j - rec.j1, c);
      out += std::to_string(j) + ',' + std::to_string(pyr.count(j)) + ',' + std::to_string(c + 1) + ',' + cell(diag) +
             ',' + cell(eig) + ',' + cell(bc) + '\n';
    }
  }
  return out;
}

void print_vector(std::ostream& out, std::string_view name, const Eigen::VectorXd& v) {
  out << name << " =";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << io::format_double(v(i));
  out << '\n';
}

int cmd_estimate(const EstimateOptions& o, std::ostream& out, std::ostream& err) {
  const auto series = load_series(o.input);
  const Eigen::MatrixXd data = o.increments ? cumulative_sum(series.data) : series.data;
  const auto [j1, j2] = o.range.resolve(static_cast<std::size_t>(data.cols()), err);
  const auto filter = WaveletFilter::by_name(o.range.filter);
  const auto pyr = dwt(data, std::nullopt, filter);
  const auto rec = estimate_all(pyr, j1, j2, weight_balance_from_string(o.range.weights));

  const fs::path dir(o.out_dir);
  io::write_atomic(dir / "estimate.json", dump(to_json(rec)));
  io::write_atomic(dir / "log_spectra.csv", log_spectra_csv(pyr, rec));
  out << "octaves " << j1 << ".." << j2 << '\n';
  print_vector(out, "H_U", rec.h_u);
  print_vector(out, "H_M", rec.h_m);
  print_vector(out, "H_M_bc", rec.h_m_bc);
  return 0;
}

// --- mc ---------------------------------------------------------------------

struct McOptions {
  std::string params;
  std::size_t n = 0;
  std::size_t n_mc = 0;
  std::uint64_t seed = 0;
  RangeOptions range;
  unsigned threads = 0;
  std::string out_dir = ".";
};

int cmd_mc(const McOptions& o, std::ostream& out, std::ostream& err) {
  McConfig cfg{load_params(o.params)};
  cfg.n = o.n;
  cfg.n_mc = o.n_mc;
  cfg.seed0 = o.seed;
  cfg.range_cfg = o.range.config();
  cfg.filter = WaveletFilter::by_name(o.range.filter);
  cfg.balance = weight_balance_from_string(o.range.weights);
  cfg.j1_override = o.range.j1;
  cfg.j2_override = o.range.j2;
  cfg.threads = resolve_threads(o.threads);
  const auto report = run_mc(cfg);
  if (report.warning) err << "warning: " << *report.warning << '\n';

  const fs::path dir(o.out_dir);
  io::write_atomic(dir / "mc_report.json", dump(to_json(report)));
  io::write_atomic(dir / "estimates.csv", estimates_csv(report));
  io::write_atomic(dir / "qq.csv", qq_csv(report));
  io::write_atomic(dir / "norms.csv", norms_csv(report));
  io::write_atomic(dir / "corr.csv", corr_csv(report));
  out << report.n_mc << " realizations on " << cfg.threads << " threads\n";
  out << "octaves " << report.j1 << ".." << report.j2 << ", V_N = " << io::format_double(report.v_n) << '\n';
  for (Estimator e : kEstimators) {
    const auto i = static_cast<Eigen::Index>(e);
    out << to_string(e) << ": |bias2| = " << io::format_double(report.spectral_norms(i, 0))
        << ", |cov| = " << io::format_double(report.spectral_norms(i, 1))
        << ", |mse| = " << io::format_double(report.spectral_norms(i, 2)) << '\n';
  }
  return 0;
}

// --- sliding ----------------------------------------------------------------

struct SlidingOptions {
  std::string input;
  bool increments = false;
  std::size_t window = 0;
  std::size_t hop = 0;
  int j1 = 1;
  int j2 = 4;
  std::string filter = "db2";
  std::string weights = "by-count";
  std::optional<std::string> labels;
  double alpha = 0.05;
  std::string out_dir = ".";
};

double estimate_value(const EstimateRecord& r, Estimator e, Eigen::Index m) {
  switch (e) {
    case Estimator::Univariate: return r.h_u(m);
    case Estimator::Multivariate: return r.h_m(m);
    case Estimator::MultivariateBc: return r.h_m_bc(m);
  }
  return 0.0;
}

int cmd_sliding(const SlidingOptions& o, std::ostream& out) {
  if (o.hop < 1 || o.hop > o.window)
    throw Error(ErrorCode::InvalidArgument, "sliding windows need window >= hop >= 1, got window " +
                                                std::to_string(o.window) + ", hop " + std::to_string(o.hop));
  if (o.labels && fs::path(o.input).extension() == ".bin")
    throw Error(ErrorCode::InvalidArgument, "--labels needs a CSV input");
  const auto series = load_series(o.input, o.labels.value_or(""));
  const Eigen::MatrixXd data = o.increments ? cumulative_sum(series.data) : series.data;
  const auto rows = sliding_window_estimates(data, o.window, o.hop, o.j1, o.j2, WaveletFilter::by_name(o.filter),
                                             weight_balance_from_string(o.weights));
  std::vector<std::optional<std::string>> labels(rows.size());
  if (o.labels) labels = window_labels(series.labels, o.window, o.hop);

  const auto m = data.rows();
  std::string csv = "start,label";
  for (Estimator e : kEstimators)
    for (Eigen::Index c = 0; c < m; ++c) csv += ',' + to_string(e) + '_' + std::to_string(c + 1);
  csv += '\n';
  auto records = nlohmann::json::array();
  for (std::size_t w = 0; w < rows.size(); ++w) {
    csv += std::to_string(rows[w].start) + ',' + io::csv_escape(labels[w].value_or(""));
    for (Estimator e : kEstimators)
      for (Eigen::Index c = 0; c < m; ++c) csv += ',' + io::format_double(estimate_value(rows[w].record, e, c));
    csv += '\n';
    records.push_back({{"start", rows[w].start},
                       {"label", labels[w] ? nlohmann::json(*labels[w]) : nlohmann::json(nullptr)},
                       {"record", to_json(rows[w].record)}});
  }
  const fs::path dir(o.out_dir);
  io::write_atomic(dir / "sliding.csv", csv);
  io::write_atomic(dir / "sliding.json", dump(records));
  out << rows.size() << " windows\n";

  if (!o.labels) return 0;
  std::vector<std::string> groups;
  for (const auto& l : labels)
    if (l && std::find(groups.begin(), groups.end(), *l) == groups.end()) groups.push_back(*l);
  if (groups.size() != 2)
    throw Error(ErrorCode::InvalidArgument, "two-group comparison needs exactly two window labels, found " +
                                                std::to_string(groups.size()));

  std::vector<std::string> names;
  std::vector<double> pvals;
  for (Estimator e : kEstimators) {
    for (Eigen::Index c = 0; c < m; ++c) {
      std::vector<double> a, b;
      for (std::size_t w = 0; w < rows.size(); ++w) {
        if (!labels[w]) continue;
        (*labels[w] == groups[0] ? a : b).push_back(estimate_value(rows[w].record, e, c));
      }
      names.push_back(to_string(e) + '_' + std::to_string(c + 1));
      pvals.push_back(wilcoxon_ranksum(a, b));
    }
  }
  const auto report = bh_reject(pvals, o.alpha);
  auto j = to_json(report);
  j["groups"] = groups;
  j["names"] = names;
  io::write_atomic(dir / "group_tests.json", dump(j));
  io::write_atomic(dir / "group_tests.csv", group_test_csv(report, names));
  std::size_t rejected = 0;
  for (bool r : report.rejected) rejected += r ? 1 : 0;
  out << rejected << " of " << pvals.size() << " comparisons rejected at alpha = " << io::format_double(o.alpha)
      << '\n';
  return 0;
}

}  // namespace

std::string version_string() {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(filter_taps_hash()));
  return "ofbmkit " + std::string(kToolVersion) + "\nfilter-taps-hash " + hash + "\nrng " +
         std::string(GaussianStream::kAlgorithm) + "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesis and wavelet-domain estimation of mixed multivariate fractional Brownian motion"};
  app.name("ofbmkit");
  bool show_version = false;
  app.add_flag("--version", show_version, "print version, filter taps hash and RNG identifier");
  app.require_subcommand(0, 1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "synthesize one sample path");
  synth_cmd->add_option("--params", synth.params, "model parameters JSON")->required();
  synth_cmd->add_option("--n", synth.n, "number of samples")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--kind", synth.kind, "mfbm (path) or mfgn (increments)")
      ->check(CLI::IsMember({"mfbm", "mfgn"}))
      ->capture_default_str();
  synth_cmd->add_option("--format", synth.format, "csv or bin")
      ->check(CLI::IsMember({"csv", "bin"}))
      ->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output file (default <out-dir>/path.<format>)");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->capture_default_str();

  EstimateOptions est;
  auto* est_cmd = app.add_subcommand("estimate", "estimate Hurst exponents of one series");
  est_cmd->add_option("--input", est.input, "series file (CSV, or .bin with a .json sidecar)")->required();
  est_cmd->add_flag("--increments", est.increments, "input holds increments; integrate before analysis");
  est.range.attach(*est_cmd);
  est_cmd->add_option("--out-dir", est.out_dir, "output directory")->capture_default_str();

  McOptions mc;
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo performance study");
  mc_cmd->add_option("--params", mc.params, "model parameters JSON")->required();
  mc_cmd->add_option("--n", mc.n, "samples per realization")->required()->check(CLI::PositiveNumber);
  mc_cmd->add_option("--n-mc", mc.n_mc, "number of realizations")->required();
  mc_cmd->add_option("--seed", mc.seed, "base seed; realization r uses seed + r")->capture_default_str();
  mc.range.attach(*mc_cmd);
  mc_cmd->add_option("--threads", mc.threads, "worker threads (default: OFBMKIT_THREADS or all cores)");
  mc_cmd->add_option("--out-dir", mc.out_dir, "output directory")->capture_default_str();

  SlidingOptions sl;
  auto* sl_cmd = app.add_subcommand("sliding", "estimates over sliding windows, optional two-group tests");
  sl_cmd->add_option("--input", sl.input, "series file (CSV, or .bin with a .json sidecar)")->required();
  sl_cmd->add_flag("--increments", sl.increments, "input holds increments; integrate before analysis");
  sl_cmd->add_option("--window", sl.window, "window length in samples")->required();
  sl_cmd->add_option("--hop", sl.hop, "hop between window starts in samples")->required();
  sl_cmd->add_option("--j1", sl.j1, "finest regression octave")->capture_default_str();
  sl_cmd->add_option("--j2", sl.j2, "coarsest regression octave")->capture_default_str();
  sl_cmd->add_option("--filter", sl.filter, "wavelet filter")->capture_default_str();
  sl_cmd->add_option("--weights", sl.weights, "uniform or by-count")
      ->check(CLI::IsMember({"uniform", "by-count"}))
      ->capture_default_str();
  sl_cmd->add_option("--labels", sl.labels, "CSV column with per-sample group labels");
  sl_cmd->add_option("--alpha", sl.alpha, "false discovery rate")->capture_default_str();
  sl_cmd->add_option("--out-dir", sl.out_dir, "output directory")->capture_default_str();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("ofbmkit");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Usage);
  }

  if (show_version) {
    out << version_string();
    return 0;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (est_cmd->parsed()) return cmd_estimate(est, out, err);
    if (mc_cmd->parsed()) return cmd_mc(mc, out, err);
    if (sl_cmd->parsed()) return cmd_sliding(sl, out);
    err << app.help();
    return static_cast<int>(ExitCode::Usage);
  } catch (const CliFailure& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(exit_code_for(e.code()));
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Internal);
  }
}

}  // namespace ofbm
