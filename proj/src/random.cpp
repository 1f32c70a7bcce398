#include "jschur/random.hpp"

#include <cmath>
#include <numbers>

namespace jschur {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open_zero() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Matrix Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = gaussian();
  return a;
}

Vector Rng::gaussian_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gaussian();
  return v;
}

Matrix Rng::orthogonal(Eigen::Index d) {
  const Matrix g = gaussian_matrix(d, d);
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  for (Eigen::Index k = 0; k < d; ++k) {
    if (qr.matrixQR()(k, k) < 0.0) q.col(k) *= -1.0;
  }
  return q;
}

}  // namespace jschur
