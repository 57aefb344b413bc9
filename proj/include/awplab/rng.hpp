// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace awplab {

/// splitmix64: the 64-bit stream generator used everywhere seeds matter.
/// Bit-exact within one build; streams for sub-tasks are derived with mix().
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed), has_spare_(false) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cached spare).
  double gaussian();

  /// Derive a decorrelated child seed from (seed, index).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
  bool has_spare_;
  double spare_ = 0.0;
};

inline double SplitMix64::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  const double pi = 3.14159265358979323846;
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * pi * u2);
}

}  // namespace awplab
