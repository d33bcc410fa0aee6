#pragma once

#include <cstdint>
#include <random>

namespace perp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the stream owning `chunk` under `master_seed`. Depends only on the
/// pair, never on which worker draws the chunk.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t chunk) {
  return mix64(mix64(master_seed) ^ mix64(chunk + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t chunk) {
  return Rng(derive_seed(master_seed, chunk));
}

/// Uniform draw on (0, 1]; never returns 0 so logs and inversions stay finite.
inline double uniform_open0(Rng& rng) {
  const double u = 1.0 - std::generate_canonical<double, 53>(rng);
  return u > 0.0 ? u : 0x1p-53;
}

}  // namespace perp
