#pragma once

#include "lmf/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace lmf {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Seed for replicate `index` of stream `stream` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Portable random source: mt19937_64 for bits, 53-bit uniforms, and the
// Marsaglia polar method for normals. Unlike std::normal_distribution, the
// output sequence does not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double sd = 1.0);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

  // Random permutation of 0..n-1.
  std::vector<Eigen::Index> permutation(Eigen::Index n);

  // k distinct indices from 0..n-1, in draw order.
  std::vector<Eigen::Index> sample(Eigen::Index n, Eigen::Index k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lmf
