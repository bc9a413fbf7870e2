#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ddcd {

using Engine = std::mt19937_64;

// Named sub-streams so independent consumers of one base seed never share draws.
enum class Stream : std::uint64_t {
  kGraph = 1,
  kWeights = 2,
  kNoise = 3,
  kBatch = 4,
  kTimestep = 5,
  kDiffusion = 6,
  kInit = 7,
  kDataset = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  return derive_seed(base, {static_cast<std::uint64_t>(stream), index});
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace ddcd
