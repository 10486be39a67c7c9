/// @file rng.hpp
/// @brief Deterministic pseudo-random sampling used by every stochastic sweep.
///
/// All sampling in the library goes through SplitMix64 so that a (seed,
/// call-sequence) pair reproduces the exact same doubles on every platform.
/// std::mt19937 + std::uniform_real_distribution is avoided on purpose: the
/// standard does not pin down distribution output, and byte-identical reports
/// across reruns are part of the library contract.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mrf {

/// splitmix64 generator (public-domain algorithm by Sebastiano Vigna).
/// 64-bit state, 64-bit output, period 2^64.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 explicit mantissa bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform point in the axis-aligned box [lo, hi].
  std::vector<double> in_box(std::span<const double> lo,
                             std::span<const double> hi) {
    std::vector<double> x(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) x[i] = uniform(lo[i], hi[i]);
    return x;
  }

  /// Uniform point in the closed Euclidean ball of given radius
  /// (rejection from the enclosing cube; exact and deterministic).
  std::vector<double> in_ball(int dim, double radius) {
    std::vector<double> u(static_cast<std::size_t>(dim));
    for (;;) {
      double norm2 = 0.0;
      for (auto& c : u) {
        c = uniform(-1.0, 1.0);
        norm2 += c * c;
      }
      if (norm2 <= 1.0) {
        for (auto& c : u) c *= radius;
        return u;
      }
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace mrf
