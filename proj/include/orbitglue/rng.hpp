#pragma once

#include <cstdint>

namespace orbitglue {

// Counter-based splittable generator. A stream is fully determined by
// (seed, stream id); the n-th output is a pure function of (key, n), so
// distributing sample indices across workers cannot change any draw.
// Mixing is the SplitMix64 finalizer, adequate for Monte Carlo use here.
struct SplitStream {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static SplitStream make(std::uint64_t seed, std::uint64_t stream) {
    SplitStream s;
    s.key = mix(seed + kGamma) ^ mix(stream * kGamma + 0x2545F4914F6CDD1Dull);
    s.counter = 0;
    return s;
  }

  std::uint64_t next_u64() { return mix(key + (++counter) * kGamma); }

  // Uniform in [0, 1) with 53 mantissa bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Index into a cumulative-probability row (cum is nondecreasing, back() ~ 1).
  template <typename Vec>
  int pick(const Vec& cum) {
    double u = next_unit();
    int n = static_cast<int>(cum.size());
    for (int i = 0; i < n - 1; ++i) {
      if (u < cum[i]) return i;
    }
    return n - 1;
  }
};

}  // namespace orbitglue
