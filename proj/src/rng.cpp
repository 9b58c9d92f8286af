#include "ofbm/rng.hpp"

#include <cmath>

namespace ofbm {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

GaussianStream::GaussianStream(std::uint64_t seed) noexcept : counter_(splitmix64_mix(seed + kGolden)) {}

std::uint64_t GaussianStream::next_u64() noexcept {
  counter_ += kGolden;
  return splitmix64_mix(counter_);
}

double GaussianStream::next_symmetric_uniform() noexcept {
  // 53 random bits, centred: (k + 0.5) / 2^52 - 1 never hits -1 or 1.
  const auto k = static_cast<double>(next_u64() >> 11);
  return (k + 0.5) * 0x1.0p-52 - 1.0;
}

double GaussianStream::next_normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = next_symmetric_uniform();
    v = next_symmetric_uniform();
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

}  // namespace ofbm
