#pragma once
// Seeded RNG streams: one independent stream per replication, portable across
// platforms (the mt19937_64 engine is bit-specified by the standard; the std
// distributions are not, so sampling goes through uniform01 below).

#include <cstdint>
#include <random>

namespace addow {

// SplitMix64 finalizer; used only to mix seed material.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for sub-stream (a, b) of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = mix64(master ^ 0x6a09e667f3bcc908ull);
  s = mix64(s ^ mix64(a));
  s = mix64(s ^ mix64(b));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

// Uniform in the open interval (0, 1), 53-bit resolution; never returns an
// exact 0 or 1 so inverse-c.d.f. transforms stay finite.
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace addow
