#pragma once

#include <cmath>
#include <cstdint>

namespace jle {

// Counter-based generator: every draw is a pure function of (seed, counter),
// so a loop filling index k with value(k) produces identical bits no matter
// how the iterations are ordered or split across threads. This is what makes
// sample_matrix, synth_blobs and split reproducible for any worker count.
//
// bits(k) is splitmix64 evaluated at state seed + (k+1)*gamma.
struct CounterRng {
  std::uint64_t seed = 0;

  static constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t bits(std::uint64_t k) const { return mix(seed + (k + 1) * gamma); }

  // Uniform on the open interval (0,1); never 0, so it is safe under log().
  double uniform(std::uint64_t k) const {
    return (static_cast<double>(bits(k) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the Box-Muller map, consuming counters 2k and 2k+1.
  // Deterministic transform of uniforms, no hidden generator state.
  double gaussian(std::uint64_t k) const {
    const double u1 = uniform(2 * k);
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // +1 or -1 from the top bit.
  double sign(std::uint64_t k) const { return (bits(k) >> 63) ? -1.0 : 1.0; }

  // Integer in [0, bound). Modulo bias is ~bound/2^64, irrelevant here.
  std::uint64_t below(std::uint64_t k, std::uint64_t bound) const { return bits(k) % bound; }

  // Independent-looking stream for a distinct purpose under the same user seed.
  CounterRng derive(std::uint64_t stream) const {
    return CounterRng{mix(seed ^ (stream + 1) * 0xD1B54A32D192ED03ull)};
  }
};

}  // namespace jle
