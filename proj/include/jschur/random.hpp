#pragma once

// Reproducible random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard. Uniform doubles take the top 53 bits
// of one draw; Gaussians use the Box-Muller transform.

#include <cstdint>
#include <random>

#include "jschur/linalg.hpp"

namespace jschur {

/// SplitMix64 finalizer applied to (seed, stream); used to give each trial
/// an independent, order-free stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero();
  double gaussian();

  Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
  Vector gaussian_vector(Eigen::Index n);
  /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
  /// signs of R's diagonal absorbed into Q).
  Matrix orthogonal(Eigen::Index d);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace jschur
