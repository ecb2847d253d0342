#pragma once

#include <cstdint>
#include <string_view>

namespace advgen {

// Deterministic, platform-independent generator used for every seeded
// decision in the engine (diversity pruning, bootstrap resampling, corpus
// jitter). std::mt19937 distributions are implementation-defined, so all
// randomness goes through this instead.
struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27u)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31u);
  }

  // Uniform in [0, 1) with 53 bits of entropy.
  double uniform() { return static_cast<double>(next() >> 11u) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }
};

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  SplitMix64 mix(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6u) + (a >> 2u)));
  return mix.next();
}

inline uint64_t hash_string(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace advgen
