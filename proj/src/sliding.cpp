#include "ofbm/analysis.hpp"
#include "ofbm/error.hpp"

namespace ofbm {

namespace {

void check_window(std::size_t window, std::size_t hop) {
  if (hop < 1 || window < hop)
    throw Error(ErrorCode::InvalidArgument, "sliding windows need window >= hop >= 1, got window " +
                                                std::to_string(window) + ", hop " + std::to_string(hop));
}

}  // namespace

std::vector<WindowEstimate> sliding_window_estimates(const Eigen::MatrixXd& x, std::size_t window, std::size_t hop,
                                                     int j1, int j2, const WaveletFilter& f, WeightBalance balance) {
  check_window(window, hop);
  if (j2 <= j1)
    throw Error(ErrorCode::DegenerateRange,
                "regression needs j2 > j1, got [" + std::to_string(j1) + ", " + std::to_string(j2) + "]");
  const auto n = static_cast<std::size_t>(x.cols());
  if (n < window) return {};
  const auto m = static_cast<std::size_t>(x.rows());
  const auto counts = coefficient_counts(window, f.length(), j2);
  if (static_cast<int>(counts.size()) < j2 || counts.back() < m) {
    throw Error(ErrorCode::WindowTooSmall,
                "window of " + std::to_string(window) + " samples leaves " +
                    std::to_string(static_cast<int>(counts.size()) < j2 ? 0 : counts.back()) +
                    " coefficients at octave " + std::to_string(j2) + " for " + std::to_string(m) + " components");
  }
  std::vector<WindowEstimate> out;
  for (std::size_t start = 0; start + window <= n; start += hop) {
    const Eigen::MatrixXd segment = x.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(window));
    const auto pyr = dwt(segment, j2, f);
    out.push_back({start, estimate_all(pyr, j1, j2, balance)});
  }
  return out;
}

std::vector<std::optional<std::string>> window_labels(std::span<const std::string> labels, std::size_t window,
                                                      std::size_t hop) {
  check_window(window, hop);
  std::vector<std::optional<std::string>> out;
  for (std::size_t start = 0; start + window <= labels.size(); start += hop) {
    const std::string& first = labels[start];
    bool uniform = true;
    for (std::size_t t = start + 1; t < start + window && uniform; ++t) uniform = labels[t] == first;
    out.push_back(uniform ? std::optional<std::string>(first) : std::nullopt);
  }
  return out;
}

}  // namespace ofbm
