#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "pml/density_map.hpp"

namespace pml {

/// SplitMix64 finalizer (Steele, Lea & Flood); a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Combines a base seed with stream indices (epoch, item, ...) into an
/// independent-looking seed. Order-sensitive.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix64(base ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t p : parts) h = mix64(h ^ (p + 0x9E3779B97F4A7C15ULL));
  return h;
}

/// Counter-based SplitMix64 generator. Every derived quantity below is
/// specified exactly so streams reproduce across implementations:
///  - uniform01: top 53 bits of the next word times 2^-53, in [0, 1).
///  - uniform_int(lo, hi): lo + next % (hi - lo + 1).
///  - normal: Box-Muller cosine branch from two uniforms u1, u2,
///    sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine branch is discarded.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % range);
  }

  double normal() noexcept {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Map with i.i.d. uniform [lo, hi) entries.
inline DensityMap random_uniform_map(SplitMix64& rng, int level, double lo, double hi) {
  std::vector<double> v(cell_count(level));
  for (double& x : v) x = rng.uniform(lo, hi);
  return DensityMap(level, std::move(v));
}

}  // namespace pml
