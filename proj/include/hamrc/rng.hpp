#pragma once

#include <cstdint>
#include <random>

namespace hamrc {

/// Seeded 64-bit Mersenne Twister with a fixed, library-independent mapping
/// to floating point, so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent seed for a named sub-stream (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Stream identifiers used by derive_seed across the library.
inline constexpr std::uint64_t kStreamInitialState = 1;
inline constexpr std::uint64_t kStreamSpectralStart = 2;
inline constexpr std::uint64_t kStreamBetaDraw = 3;
inline constexpr std::uint64_t kStreamHyperopt = 4;

}  // namespace hamrc
