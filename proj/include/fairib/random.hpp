#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fairib {

// Deterministic RNG front end. mt19937_64 output is pinned by the standard;
// all transforms below are spelled out so the byte stream never depends on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Exponential(1) draw.
  double exponential() { return -std::log1p(-uniform()); }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// splitmix64-style mix, used to derive independent substreams from one seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// One row of a symmetric Dirichlet(1) draw, i.e. uniform on the simplex.
inline std::vector<double> dirichlet_row(Rng& rng, std::size_t n) {
  std::vector<double> row(n);
  double sum = 0.0;
  for (auto& v : row) {
    v = rng.exponential();
    sum += v;
  }
  if (sum <= 0.0) {  // all draws hit exactly zero; astronomically unlikely
    for (auto& v : row) v = 1.0 / static_cast<double>(n);
    return row;
  }
  for (auto& v : row) v /= sum;
  return row;
}

/// Inverse-CDF draw from a categorical pmf.
inline std::size_t sample_index(Rng& rng, std::span<const double> pmf) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < pmf.size(); ++i) {
    cum += pmf[i];
    if (u < cum) return i;
  }
  return pmf.empty() ? 0 : pmf.size() - 1;
}

}  // namespace fairib
