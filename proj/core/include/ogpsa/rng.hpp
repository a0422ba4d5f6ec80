#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ogpsa {

using Rng = std::mt19937_64;

// Independent, reproducible stream derived from (seed, stream id).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6f677073u};
  return Rng(seq);
}

inline std::vector<double> random_normal(std::size_t n, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

inline std::vector<double> random_uniform(std::size_t n, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

}  // namespace ogpsa
