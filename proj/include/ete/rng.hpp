#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ete {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed for an independent stream identified by (master, tags...).
// Streams for different work items never depend on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t tag : tags) h = splitmix64(h ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(master, tags));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Stream tags, so that independent consumers of one master seed never collide.
namespace stream {
inline constexpr std::uint64_t surrogate = 1;
inline constexpr std::uint64_t jitter = 2;
inline constexpr std::uint64_t ragwitz = 3;
inline constexpr std::uint64_t lorenz = 4;
inline constexpr std::uint64_t ar = 5;
inline constexpr std::uint64_t bench = 6;
}  // namespace stream

}  // namespace ete
