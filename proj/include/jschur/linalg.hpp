#pragma once

// Dense structured linear algebra for joint triangularization: triangular
// projections, the strictly-lower selector, exponential and logarithm on the
// orthogonal group, a real eigensolver and an eigenvalue-ordered Schur form.
//
// All matrices are column-major (Eigen default); vec() stacks columns.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jschur/errors.hpp"

namespace jschur {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Strictly lower part: entries (i,j) with i > j, zeros elsewhere.
Matrix low_part(const Matrix& a);
/// Strictly upper part: entries (i,j) with i < j, zeros elsewhere.
Matrix up_part(const Matrix& a);
/// Diagonal part as a square matrix.
Matrix diag_part(const Matrix& a);

Matrix commutator(const Matrix& a, const Matrix& b);

Vector vec(const Matrix& a);
Matrix mat(const Vector& v, Eigen::Index d);

/// Number of strictly lower entries of a d x d matrix, d(d-1)/2.
inline Eigen::Index lower_count(Eigen::Index d) { return d * (d - 1) / 2; }

/// Selector onto the strictly-lower coordinates of vec(A).
///
/// Rows of p_low enumerate the strictly lower positions in column-major
/// order, so p_low * vec(A) lists A(1,0), A(2,0), ..., A(d-1,0), A(2,1), ...
/// The masks are the diagonals of the d^2 x d^2 operators Low and Up.
struct LowProjector {
  Eigen::Index d = 0;
  Matrix p_low;
  Vector low_mask;
  Vector up_mask;

  Vector select(const Matrix& a) const { return p_low * vec(a); }
  Matrix embed(const Vector& x) const { return mat(p_low.transpose() * x, d); }
};

LowProjector build_low_projector(Eigen::Index d);

/// Tangent vector of the orthogonal group: a real skew-symmetric matrix.
class SkewDirection {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Throws InvalidArgument when x + x^T exceeds kTolerance entrywise.
  explicit SkewDirection(Matrix x);
  static SkewDirection zero(Eigen::Index d);
  /// E - E^T for an arbitrary E (typically strictly lower).
  static SkewDirection from_lower(const Matrix& e);

  const Matrix& matrix() const { return x_; }
  Eigen::Index dim() const { return x_.rows(); }
  double norm() const { return x_.norm(); }

 private:
  Matrix x_;
};

/// A d x d real matrix with ||U^T U - I||_F <= 1e-10.
class OrthogonalFrame {
 public:
  static constexpr double kTolerance = 1e-10;

  explicit OrthogonalFrame(Matrix u);
  static OrthogonalFrame identity(Eigen::Index d);

  const Matrix& matrix() const { return u_; }
  Eigen::Index dim() const { return u_.rows(); }
  double orthogonality_error() const;

 private:
  Matrix u_;
};

/// exp(scale * X). The result is a rotation (determinant +1).
OrthogonalFrame skew_exp(const SkewDirection& x, double scale = 1.0);

/// Principal logarithm of a rotation, from the spectral decomposition of the
/// symmetric part. Rejects det(Q) = -1 and rotations with an eigenvalue within
/// 1e-6 of -1, where the principal branch is not well defined.
SkewDirection orthogonal_log(const OrthogonalFrame& q);

struct EigenSystem {
  Vector values;   // ascending
  Matrix vectors;  // unit columns, first nonzero entry positive
};

/// Eigen-decomposition of a matrix with real, simple eigenvalues.
/// Throws ComplexEigenvalues or NearDefective (gap below 1e-10 * ||M||_F).
EigenSystem real_eigen(const Matrix& m);

struct SchurForm {
  OrthogonalFrame u;
  Matrix t;  // u^T m u, upper triangular up to rounding
};

/// Real Schur form with the diagonal in a prescribed order. order[k] is the
/// index, among the ascending eigenvalues, that lands at diagonal slot k.
SchurForm ordered_schur(const Matrix& m, std::span<const int> order);
/// Ascending order.
SchurForm ordered_schur(const Matrix& m);

struct MatrixMetrics {
  double frobenius = 0.0;
  double spectral = 0.0;
  /// sigma_max / sigma_min; +infinity when sigma_min vanishes numerically.
  double condition = 0.0;
};

MatrixMetrics matrix_metrics(const Matrix& a);
double condition_number(const Matrix& a);

/// Flip columns so that each column's first entry of non-negligible
/// magnitude is positive.
void normalize_column_signs(Matrix& a);

/// Solves X * a = b for X using column-pivoted QR and verifies the relative
/// residual; throws `on_singular` when a is numerically singular.
Matrix right_divide(const Matrix& b, const Matrix& a, ErrorCode on_singular);

/// Inverse spectral norm 1/sigma_min of a square matrix; throws
/// SingularOperator when sigma_min < 1e-12 * sigma_max.
double inverse_spectral_norm(const Matrix& a);

}  // namespace jschur
