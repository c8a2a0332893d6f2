#pragma once

#include <cstdint>

namespace reflectdepth {

// splitmix64: tiny deterministic generator, stable across platforms (frozen
// test fixtures depend on the exact stream, so std:: distributions are out).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  int next_int(int n) {  // uniform in [0, n)
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t state_;
};

// Stateless integer hash for procedural textures.
inline std::uint64_t hash_u64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

inline double hash_unit(std::uint64_t a, std::uint64_t b, std::uint64_t seed) {
  std::uint64_t h = hash_u64(a * 0x9e3779b97f4a7c15ULL + hash_u64(b + seed));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace reflectdepth
