#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rfs {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; a bijective mixer for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named sub-stream of a master seed, e.g. derive_seed(master, "global-operators").
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
  return mix64(master ^ mix64(fnv1a(purpose)));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a) {
  return mix64(master ^ mix64(a + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

}  // namespace rfs
