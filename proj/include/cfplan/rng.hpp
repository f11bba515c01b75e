#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace cfplan {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// xoshiro256++ with splitmix64 seeding. Hand-rolled transforms keep every
/// drawn number identical across platforms and standard libraries, which the
/// byte-identical-output contract of the harness depends on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; one value per call, no caching, so the
  /// stream layout is a pure function of the call sequence.
  double gaussian() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Circularly-symmetric complex normal with unit variance.
  std::complex<double> complex_gaussian() {
    double re = gaussian();
    double im = gaussian();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

/// Deterministic substream seed for (purpose, index) pairs so parallel
/// workers and repeated runs draw from disjoint, reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t index = 0) {
  std::uint64_t s = master;
  std::uint64_t a = detail::splitmix64(s);
  s ^= purpose * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = detail::splitmix64(s);
  s ^= index * 0xda942042e4dd58b5ULL;
  std::uint64_t c = detail::splitmix64(s);
  return a ^ (b + 0x165667b19e3779f9ULL) ^ (c << 1);
}

}  // namespace cfplan
