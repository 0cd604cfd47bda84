#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace derrd {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

// Every random stream in an experiment is derived from the master seed and a
// tag naming the concern (init, negatives, gumbel, ...), so turning one
// method on or off never perturbs the randomness of another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(master ^ fnv1a64(tag));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Gumbel(0,1) draw: -log(-log(r)), r ~ Uniform(0,1), r = 0 rejected.
inline double gumbel(std::mt19937_64& rng) {
  double r = uniform01(rng);
  while (r <= 0.0) r = uniform01(rng);
  return -std::log(-std::log(r));
}

}  // namespace derrd
