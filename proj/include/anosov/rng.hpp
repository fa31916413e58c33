#pragma once

#include <cstdint>

// Counter-based uniform variates: value depends only on (seed, counters).
namespace anosov::rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
  h = mix64(h ^ a);
  h = mix64(h ^ (b * 0xd1342543de82ef95ULL));
  h = mix64(h ^ (c * 0xaf251af3b0f025b5ULL));
  return h;
}

// uniform on [0, 1)
inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return double(hash(seed, a, b, c) >> 11) * 0x1.0p-53;
}

}  // namespace anosov::rng
