#include "jschur/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace jschur {

Matrix low_part(const Matrix& a) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  out.triangularView<Eigen::StrictlyLower>() = a.triangularView<Eigen::StrictlyLower>();
  return out;
}

Matrix up_part(const Matrix& a) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  out.triangularView<Eigen::StrictlyUpper>() = a.triangularView<Eigen::StrictlyUpper>();
  return out;
}

Matrix diag_part(const Matrix& a) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  out.diagonal() = a.diagonal();
  return out;
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

Matrix mat(const Vector& v, Eigen::Index d) {
  if (v.size() != d * d) fail(ErrorCode::DimensionMismatch, "mat: vector length is not d^2");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

LowProjector build_low_projector(Eigen::Index d) {
  if (d < 1) fail(ErrorCode::InvalidArgument, "build_low_projector: d must be positive");
  LowProjector p;
  p.d = d;
  p.p_low = Matrix::Zero(lower_count(d), d * d);
  p.low_mask = Vector::Zero(d * d);
  p.up_mask = Vector::Zero(d * d);
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Index k = j * d + i;
      if (i > j) {
        p.p_low(row++, k) = 1.0;
        p.low_mask(k) = 1.0;
      } else if (i < j) {
        p.up_mask(k) = 1.0;
      }
    }
  }
  return p;
}

// ---------------------------------------------------------------------------

SkewDirection::SkewDirection(Matrix x) : x_(std::move(x)) {
  if (x_.rows() != x_.cols()) fail(ErrorCode::DimensionMismatch, "SkewDirection: not square");
  const double asym = x_.size() == 0 ? 0.0 : (x_ + x_.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kTolerance) || !x_.allFinite()) {
    fail(ErrorCode::InvalidArgument, "SkewDirection: X + X^T = " + std::to_string(asym));
  }
}

SkewDirection SkewDirection::zero(Eigen::Index d) { return SkewDirection(Matrix::Zero(d, d)); }

SkewDirection SkewDirection::from_lower(const Matrix& e) {
  return SkewDirection(Matrix(e - e.transpose()));
}

OrthogonalFrame::OrthogonalFrame(Matrix u) : u_(std::move(u)) {
  if (u_.rows() != u_.cols()) fail(ErrorCode::DimensionMismatch, "OrthogonalFrame: not square");
  const double err = orthogonality_error();
  if (!(err <= kTolerance)) {
    fail(ErrorCode::InvalidArgument, "OrthogonalFrame: ||U^T U - I|| = " + std::to_string(err));
  }
}

OrthogonalFrame OrthogonalFrame::identity(Eigen::Index d) {
  return OrthogonalFrame(Matrix::Identity(d, d));
}

double OrthogonalFrame::orthogonality_error() const {
  return (u_.transpose() * u_ - Matrix::Identity(u_.rows(), u_.cols())).norm();
}

// ---------------------------------------------------------------------------

OrthogonalFrame skew_exp(const SkewDirection& x, double scale) {
  const Matrix a = scale * x.matrix();
  if (a.size() == 0) return OrthogonalFrame(Matrix(0, 0));
  return OrthogonalFrame(Matrix(a.exp()));
}

namespace {

// theta / sin(theta) with theta = arccos(c).
double arccos_ratio(double c) {
  c = std::clamp(c, -1.0, 1.0);
  const double s = std::sqrt((1.0 - c) * (1.0 + c));
  if (s < 1e-4) {
    const double t2 = 2.0 * (1.0 - c);
    return 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
  }
  return std::acos(c) / s;
}

}  // namespace

// With C = (Q + Q^T)/2 and S = (Q - Q^T)/2, log(Q) = f(C) S, f(c) = arccos(c) / sqrt(1 - c^2).
SkewDirection orthogonal_log(const OrthogonalFrame& q) {
  const Matrix& u = q.matrix();
  const Eigen::Index d = u.rows();
  if (d == 0) return SkewDirection(Matrix(0, 0));
  if (u.determinant() < 0.0) fail(ErrorCode::NegativeDeterminant, "orthogonal_log: det(Q) = -1");

  const Matrix c = 0.5 * (u + u.transpose());
  const Matrix s = 0.5 * (u - u.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  if (es.info() != Eigen::Success) fail(ErrorCode::LogBranchAmbiguous, "orthogonal_log: eigensolver failed");
  const Vector& cosines = es.eigenvalues();
  // |exp(i theta) + 1| < 1e-6  <=>  1 + cos(theta) < 5e-13
  if (cosines(0) + 1.0 < 5e-13) fail(ErrorCode::LogBranchAmbiguous, "orthogonal_log: eigenvalue near -1");

  Vector f(d);
  for (Eigen::Index i = 0; i < d; ++i) f(i) = arccos_ratio(cosines(i));
  const Matrix l = es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose() * s;
  SkewDirection out(Matrix(0.5 * (l - l.transpose())));
  if (!((skew_exp(out).matrix() - u).norm() <= 1e-10)) {
    fail(ErrorCode::LogBranchAmbiguous, "orthogonal_log: rotation too close to angle pi");
  }
  return out;
}

// ---------------------------------------------------------------------------

void normalize_column_signs(Matrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double scale = a.col(j).cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (std::abs(a(i, j)) > 1e-12 * scale) {
        if (a(i, j) < 0.0) a.col(j) *= -1.0;
        break;
      }
    }
  }
}

EigenSystem real_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorCode::DimensionMismatch, "real_eigen: not square");
  const Eigen::Index d = m.rows();
  const double scale = m.norm();
  const Eigen::EigenSolver<Matrix> es(m, true);
  if (es.info() != Eigen::Success) fail(ErrorCode::ComplexEigenvalues, "real_eigen: QR iteration failed");

  const auto& lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(lambda(i).imag()) > 1e-10 * scale) {
      fail(ErrorCode::ComplexEigenvalues,
           "real_eigen: eigenvalue with imaginary part " + std::to_string(lambda(i).imag()));
    }
  }

  std::vector<int> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return lambda(a).real() < lambda(b).real(); });

  EigenSystem out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const int i = idx[static_cast<std::size_t>(k)];
    out.values(k) = lambda(i).real();
    out.vectors.col(k) = es.eigenvectors().col(i).real().normalized();
  }
  for (Eigen::Index k = 1; k < d; ++k) {
    if (out.values(k) - out.values(k - 1) < 1e-10 * scale) {
      fail(ErrorCode::NearDefective, "real_eigen: eigenvalue gap below 1e-10 ||M||");
    }
  }
  normalize_column_signs(out.vectors);
  return out;
}

SchurForm ordered_schur(const Matrix& m, std::span<const int> order) {
  const EigenSystem eig = real_eigen(m);
  const Eigen::Index d = m.rows();
  if (static_cast<Eigen::Index>(order.size()) != d) {
    fail(ErrorCode::DimensionMismatch, "ordered_schur: order length differs from d");
  }
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  Matrix v(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const int i = order[static_cast<std::size_t>(k)];
    if (i < 0 || i >= d || seen[static_cast<std::size_t>(i)]) {
      fail(ErrorCode::InvalidArgument, "ordered_schur: order is not a permutation");
    }
    seen[static_cast<std::size_t>(i)] = true;
    v.col(k) = eig.vectors.col(i);
  }

  const Eigen::HouseholderQR<Matrix> qr(v);
  Matrix u = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < d; ++k) {
    if (r(k, k) < 0.0) u.col(k) *= -1.0;
  }
  normalize_column_signs(u);
  Matrix t = u.transpose() * m * u;
  return SchurForm{OrthogonalFrame(std::move(u)), std::move(t)};
}

SchurForm ordered_schur(const Matrix& m) {
  std::vector<int> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), 0);
  return ordered_schur(m, order);
}

// ---------------------------------------------------------------------------

MatrixMetrics matrix_metrics(const Matrix& a) {
  MatrixMetrics out;
  out.frobenius = a.norm();
  if (a.size() == 0) return out;
  const Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  out.spectral = s(0);
  const double smin = s(s.size() - 1);
  const double eps = std::numeric_limits<double>::epsilon();
  if (smin <= eps * s(0) || smin == 0.0) {
    out.condition = std::numeric_limits<double>::infinity();
  } else {
    out.condition = s(0) / smin;
  }
  return out;
}

double condition_number(const Matrix& a) { return matrix_metrics(a).condition; }

Matrix right_divide(const Matrix& b, const Matrix& a, ErrorCode on_singular) {
  if (a.rows() != a.cols() || b.cols() != a.rows()) {
    fail(ErrorCode::DimensionMismatch, "right_divide: incompatible shapes");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  qr.setThreshold(1e-13);
  if (qr.rank() < a.rows()) fail(on_singular, "right_divide: matrix is numerically singular");
  Matrix x = qr.solve(b.transpose()).transpose();
  const double residual = (x * a - b).norm();
  const double scale = x.norm() * a.norm() + b.norm();
  if (!(residual <= 1e-10 * std::max(scale, 1e-300))) {
    fail(on_singular, "right_divide: residual " + std::to_string(residual));
  }
  return x;
}

double inverse_spectral_norm(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "inverse_spectral_norm: not square");
  if (a.size() == 0) return 0.0;
  const Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin >= 1e-12 * s(0)) || smin == 0.0) {
    fail(ErrorCode::SingularOperator, "operator is numerically singular");
  }
  return 1.0 / smin;
}

}  // namespace jschur
