#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "ofbm/analysis.hpp"
#include "ofbm/error.hpp"
#include "ofbm/io.hpp"

namespace ofbm {

namespace {

constexpr std::size_t kExactLimit = 8;

// Midranks (1-based) of the pooled sample, plus sum over tie groups of t^3 - t.
std::vector<double> midranks(const std::vector<double>& pooled, double& tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    while (k + 1 < n && pooled[idx[k + 1]] == pooled[idx[i]]) ++k;
    const double rank = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t t = i; t <= k; ++t) ranks[idx[t]] = rank;
    const double t = static_cast<double>(k - i + 1);
    tie_term += t * t * t - t;
    i = k + 1;
  }
  return ranks;
}

}  // namespace

double wilcoxon_ranksum(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptySample, "rank-sum test needs two nonempty samples");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite sample value");
  for (double v : y)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite sample value");

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  double tie_term = 0.0;
  const auto ranks = midranks(pooled, tie_term);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double total = nx + ny;
  const double w_obs = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);
  const double expected = nx * (total + 1.0) / 2.0;
  const double dev_obs = std::abs(w_obs - expected);

  if (x.size() <= kExactLimit && y.size() <= kExactLimit) {
    // Every assignment of |x| pooled positions to the first group is equally likely under H0.
    const std::size_t n = pooled.size();
    std::size_t hits = 0;
    std::size_t count = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != x.size()) continue;
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) w += ranks[i];
      ++count;
      if (std::abs(w - expected) >= dev_obs - 1e-9) ++hits;
    }
    return std::min(1.0, static_cast<double>(hits) / static_cast<double>(count));
  }

  const double var = nx * ny / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, dev_obs - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

std::vector<bool> GroupTestReport::rejected_by_index() const {
  std::vector<bool> out(order.size(), false);
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = rejected[k];
  return out;
}

GroupTestReport bh_reject(std::span<const double> pvals, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::BadProbability, "FDR level must lie in (0, 1)");
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::BadProbability, "p-value " + io::format_double(p) + " outside [0, 1]");
  const std::size_t k_total = pvals.size();
  GroupTestReport r;
  r.alpha = alpha;
  r.order.resize(k_total);
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  std::size_t last = 0;  // number of rejections
  for (std::size_t k = 0; k < k_total; ++k) {
    r.pvalues.push_back(pvals[r.order[k]]);
    r.thresholds.push_back(static_cast<double>(k + 1) * alpha / static_cast<double>(k_total));
    if (r.pvalues[k] <= r.thresholds[k]) last = k + 1;
  }
  r.rejected.assign(k_total, false);
  for (std::size_t k = 0; k < last; ++k) r.rejected[k] = true;
  return r;
}

nlohmann::json to_json(const GroupTestReport& r) {
  std::vector<bool> rejected(r.rejected.begin(), r.rejected.end());
  return {{"alpha", r.alpha},
          {"pvalues", r.pvalues},
          {"order", r.order},
          {"bh_thresholds", r.thresholds},
          {"rejected", rejected}};
}

std::string group_test_csv(const GroupTestReport& r, std::span<const std::string> names) {
  std::string out = "rank,index,name,p,threshold,rejected\n";
  for (std::size_t k = 0; k < r.pvalues.size(); ++k) {
    const std::size_t idx = r.order[k];
    const std::string name = idx < names.size() ? io::csv_escape(names[idx]) : std::string{};
    out += std::to_string(k + 1) + ',' + std::to_string(idx + 1) + ',' + name + ',' + io::format_double(r.pvalues[k]) +
           ',' + io::format_double(r.thresholds[k]) + ',' + (r.rejected[k] ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace ofbm
