// Deterministic random-stream derivation. Every concurrent unit of work
// (trial, pdf build, bootstrap) gets its own generator seeded from the
// experiment seed and a stream label, so parallel and serial runs agree.

#pragma once

#include <cstdint>
#include <random>

namespace ptpsync {

// splitmix64; used only to spread (seed, stream) pairs into well-mixed
// 64-bit seeds for mt19937_64.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
  std::uint64_t s = mix64(seed ^ mix64(stream ^ mix64(substream)));
  return std::mt19937_64(s);
}

}  // namespace ptpsync
