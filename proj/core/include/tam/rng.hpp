#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tam {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, k0, k1, ...). Episode e of a run uses
// derive_stream(seed, {e}) so results do not depend on evaluation order.
inline Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
  return Rng(h);
}

}  // namespace tam
