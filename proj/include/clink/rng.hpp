#pragma once
// Deterministic pseudo-random generation.
//
// xoshiro256++ seeded through splitmix64; every consumer of randomness in the
// library derives an independent stream from (base seed, purpose tag, index)
// so that identical configurations reproduce byte-identical results no matter
// how work is scheduled.

#include <cmath>
#include <cstdint>

namespace clink {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

// Stable stream derivation: hash the (seed, salt...) tuple through splitmix.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  SplitMix64 sm(base ^ (0x6a09e667f3bcc909ull + salt * 0x9e3779b97f4a7c15ull));
  sm.next();
  return sm.next();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt1,
                                 std::uint64_t salt2) {
  return derive_seed(derive_seed(base, salt1), salt2);
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0,1) with 53 random bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Standard normal pair via Box-Muller (no rejection, lane-friendly).
  void normal_pair(double& n0, double& n1) {
    double u = u01();
    double v = u01();
    // Guard the log against u == 0.
    double r = std::sqrt(-2.0 * std::log(u + 0x1.0p-100));
    n0 = r * std::cos(6.283185307179586476925 * v);
    n1 = r * std::sin(6.283185307179586476925 * v);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace clink
