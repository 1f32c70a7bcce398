#pragma once

// Symmetric order-3 tensors T_nn'n'' = sum_i Z_ni Z_n'i Z_n''i (+ sigma E),
// their observable matrices, and recovery of the components Z.

#include <optional>
#include <vector>

#include "jschur/linalg.hpp"
#include "jschur/triangularizer.hpp"

namespace jschur {

/// N x d, column i is component i.
using ComponentMatrix = Matrix;

class Tensor3 {
 public:
  Tensor3(Eigen::Index n, std::vector<double> data);

  /// Noise-free tensor built from the columns of z.
  static Tensor3 from_components(const ComponentMatrix& z);
  /// Inverse of slices().
  static Tensor3 from_slices(const std::vector<Matrix>& slices);

  Eigen::Index size() const { return n_; }
  const std::vector<double>& data() const { return data_; }
  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    return data_[static_cast<std::size_t>((a * n_ + b) * n_ + c)];
  }
  double norm() const;

  Tensor3 operator+(const Tensor3& other) const;
  Tensor3 scaled(double s) const;

 private:
  Eigen::Index n_;
  std::vector<double> data_;
};

struct ReductionPair {
  Matrix left;   // U_d
  Matrix right;  // V_d
};

/// [m_n]_{n'n''} = T_{n n' n''}.
std::vector<Matrix> slices(const Tensor3& t);

struct ObservableMatrices {
  MatrixSet set;                         // M_hat_n = m_hat_n m_hat_theta^{-1}
  Matrix m_theta;                        // sum_n theta_n m_tilde_n, N x N (unreduced)
  std::optional<ReductionPair> reduction;  // absent when d = N
};

/// Throws RankDeficient when the d-th singular value of m_theta is below
/// 1e-10 of the largest.
ObservableMatrices observable_matrices(const Tensor3& t, Eigen::Index d,
                                       const CombinationVector& theta);
/// Same with arbitrary (not necessarily unit) weights; theta = ones gives the
/// plain sum.
ObservableMatrices observable_matrices(const Tensor3& t, Eigen::Index d, const Vector& theta);
/// Reduced path with a caller-supplied reduction pair.
ObservableMatrices observable_matrices(const Tensor3& t, const Vector& theta,
                                       const ReductionPair& pair);

struct FirstOrderModel {
  std::vector<Matrix> m;  // M_n = Z diag(e_n^T Z) diag(1^T Z)^{-1} Z^{-1}
  std::vector<Matrix> w;  // W_n = e_n m^{-1} - m_n m^{-1} e m^{-1}
  double m_bound = 0.0;
  double w_bound = 0.0;
};

/// Expansion M_hat_n = M_n + sigma W_n + O(sigma^2) for theta = ones, d = N.
/// Throws SingularZ, ZeroColumnSum.
FirstOrderModel first_order_model(const ComponentMatrix& z, const Tensor3& noise);

/// d kappa(Z)^2 max|Z| / min|1^T Z|
double m_norm_bound(const ComponentMatrix& z);
/// eps kappa(Z)^2 sqrt(d) / (||Z||_2^2 min|1^T Z|) (1 + m_bound)
double w_norm_bound(const ComponentMatrix& z, double eps);

/// Y_ni = [U^T M_hat_n U]_ii.
ComponentMatrix estimate_components(const OrthogonalFrame& u, const MatrixSet& set);

/// Z diag(theta^T Z)^{-1}. Throws ZeroColumnSum.
ComponentMatrix normalize_components(const ComponentMatrix& z, const Vector& theta);

/// s_i = cbrt([Y^+ m_theta Y^+T]_ii), Z* = Y diag(s). Throws SingularY.
ComponentMatrix recover_scales(const Matrix& m_theta, const ComponentMatrix& y, const Vector& theta);
ComponentMatrix recover_scales(const Matrix& m_theta, const ComponentMatrix& y,
                               const CombinationVector& theta);

/// (1/N) min_{i<i'} sum_n (Z_ni - Z_ni')^2
double component_eigengap(const ComponentMatrix& z);

struct ComponentBound {
  double proof = 0.0;      // 4 N sigma sqrt(d(d-1)) kappa^4 / gamma M^2 W + sigma W
  double statement = 0.0;  // same without the factor N
  double gamma = 0.0;
  double kappa = 0.0;
  double m_const = 0.0;
  double w_const = 0.0;
};

/// Entrywise first-order bound on |Z*_ni/[1^T Z*]_i - Z_ni/[1^T Z]_i|.
/// Throws DegenerateSpectrum, SingularZ.
ComponentBound component_error_bound(const ComponentMatrix& z, double eps, double sigma);

struct ColumnMatch {
  std::vector<int> perm;  // truth column i <-> estimate column perm[i]
  Matrix aligned;         // estimate with columns reordered to match truth
  double max_error = 0.0;
};

/// Permutation minimizing the total entrywise error; exhaustive, d <= 8.
ColumnMatch match_columns(const Matrix& estimate, const Matrix& truth);

}  // namespace jschur
