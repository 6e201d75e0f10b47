#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>

#include "sorsnn/autodiff.hpp"
#include "sorsnn/tensor.hpp"

namespace sorsnn {

using Rng = std::mt19937_64;

// Deterministic stream derivation so that independent consumers (per-task
// shuffles, per-layer inits, ...) never share draws.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Named learnable tensor. Frozen parameters are skipped by the optimizer and
// audited for bitwise stability.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
};

inline void fill_normal(Tensor& t, Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> d(mean, stddev);
  for (auto& x : t) x = d(rng);
}

inline void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& x : t) x = d(rng);
}

}  // namespace sorsnn
