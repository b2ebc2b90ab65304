#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "potforecast/core.hpp"

namespace potforecast {

// Counter-based generator: draw(k) is a pure function of (key, k), so any
// round can be replayed without advancing state. Streams split by hashing a
// stream id into the key. Output is identical on every platform, unlike the
// <random> distributions.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  constexpr CounterRng split(std::uint64_t stream) const {
    CounterRng child;
    child.key_ = mix(key_ ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    return child;
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + counter * 0x9e3779b97f4a7c15ULL); }

  // Uniform on [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Box-Muller on counters (2k, 2k+1).
  double normal(std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t below(std::uint64_t counter, std::size_t n) const {
    const auto i = static_cast<std::size_t>(uniform(counter) * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Inverse-CDF draw from a simplex point.
  std::size_t categorical(std::uint64_t counter, const WeightVector& p) const {
    const double u = uniform(counter);
    double cdf = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) last_positive = i;
      cdf += p[i];
      if (u < cdf) return i;
    }
    return last_positive;
  }

  friend constexpr bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
};

}  // namespace potforecast
