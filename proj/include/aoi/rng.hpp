#ifndef AOI_RNG_HPP_
#define AOI_RNG_HPP_

#include <cstdint>
#include <random>

namespace aoi {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Substream purposes. Keeping generation and channel draws on separate
// streams lets different policies see the same realizations at one seed.
enum class Stream : std::uint64_t {
  kGeneration = 1,
  kSourceChannel = 2,
  kDestChannel = 3,
  kPolicy = 4,
  kTest = 5,
};

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ (index + 0x632be59bd9b4e019ULL));
  return Engine(h);
}

// Uniform on [0,1) with 53 random bits. Written out rather than using
// std::uniform_real_distribution so streams are identical across stdlibs.
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Engine& g, double p) { return uniform01(g) < p; }

}  // namespace aoi

#endif  // AOI_RNG_HPP_
