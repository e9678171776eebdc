#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advreg {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to expand one root seed into independent streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named substream of a root seed: "data", "init", "critic", "gp", "noise", "nta".
constexpr std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                       std::uint64_t index = 0) {
  return mix64(mix64(root) ^ fnv1a(name) ^ mix64(index + 0x51ed27ULL));
}

inline Rng make_rng(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  return Rng(substream_seed(root, name, index));
}

// Uniform in [0, 1) from the top 53 bits; independent of libstdc++ distribution details.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace advreg
