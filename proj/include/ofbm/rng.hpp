#pragma once

#include <cstdint>
#include <string_view>

namespace ofbm {

// Bit-reproducible Gaussian source. The seed is hashed once, then the
// generator walks a SplitMix64 counter; normals come from Marsaglia's polar
// method. Neither step depends on the standard library's distributions, whose
// output is implementation-defined.
class GaussianStream {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-hashed-seed/marsaglia-polar/v1";

  explicit GaussianStream(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (-1, 1).
  double next_symmetric_uniform() noexcept;
  double next_normal() noexcept;

 private:
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

}  // namespace ofbm
