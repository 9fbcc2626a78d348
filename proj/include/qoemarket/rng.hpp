#pragma once

#include <cstdint>

namespace qoemarket {

// Counter-based deterministic randomness: every draw is a pure function of
// its key, so grids can be sampled in any order (or in parallel) and still
// reproduce bit-for-bit.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t key_hash(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a + 0x9e3779b97f4a7c15ULL));
  h = splitmix64(h ^ (b + 0xbf58476d1ce4e5b9ULL));
  h = splitmix64(h ^ (c + 0x94d049bb133111ebULL));
  return h;
}

/// Uniform double in [0, 1) from a (seed, n, m, field) key.
inline double uniform01(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return static_cast<double>(key_hash(seed, a, b, c) >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(uint64_t seed, uint64_t a, uint64_t b, uint64_t c,
                         double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, a, b, c);
}

}  // namespace qoemarket
