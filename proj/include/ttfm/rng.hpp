#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ttfm/common.hpp"

namespace ttfm {

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Derives a child seed from a parent seed and a textual tag.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);

/// Seedable random stream with a fixed, documented algorithm:
///   - uniform(): top 53 bits of a std::mt19937_64 draw, scaled to [0, 1)
///   - normal(): Box-Muller on two uniforms, second value cached
/// The sequence is fully determined by the seed on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double uniform();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  /// d x n matrix of independent standard normals, filled column by column.
  Mat normal_matrix(Eigen::Index d, Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ttfm
