#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nsp {

/// Seeded random source with portable derived draws.
///
/// std::*_distribution output differs across standard libraries, so the
/// uniform and exponential draws are computed here from the raw 64-bit
/// engine output. Runs are bit-reproducible for a given seed on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given mean (mean > 0).
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nsp
