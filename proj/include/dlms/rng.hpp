#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dlms {

// SplitMix64 step/finalizer.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Output `stream + 1` of the SplitMix64 sequence seeded with `master`.
//
// Seeding convention used throughout: stream 0 draws the experiment model
// (covariances, noise variances, ground truth), stream t+1 drives Monte-Carlo
// trial t. Per-iteration sample batches are derived the same way from the
// trial seed, so a batch is a pure function of (trial seed, iteration).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// Column vector of i.i.d. standard normals.
inline Eigen::VectorXd standard_normal(std::mt19937_64& engine, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(engine);
  return v;
}

}  // namespace dlms
