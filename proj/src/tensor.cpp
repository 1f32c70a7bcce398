#include "jschur/tensor.hpp"

#include "jschur/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace jschur {

Tensor3::Tensor3(Eigen::Index n, std::vector<double> data) : n_(n), data_(std::move(data)) {
  if (n_ < 1) fail(ErrorCode::InvalidArgument, "Tensor3: N must be positive");
  if (data_.size() != static_cast<std::size_t>(n_ * n_ * n_)) {
    fail(ErrorCode::DimensionMismatch, "Tensor3: data length must be N^3");
  }
  for (double x : data_) {
    if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, "Tensor3: non-finite entry");
  }
}

Tensor3 Tensor3::from_components(const ComponentMatrix& z) {
  const Eigen::Index n = z.rows();
  std::vector<double> data(static_cast<std::size_t>(n * n * n), 0.0);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      for (Eigen::Index c = b; c < n; ++c) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < z.cols(); ++i) s += z(a, i) * z(b, i) * z(c, i);
        const Eigen::Index idx[3] = {a, b, c};
        for (const auto& p : {std::array{0, 1, 2}, std::array{0, 2, 1}, std::array{1, 0, 2},
                              std::array{1, 2, 0}, std::array{2, 0, 1}, std::array{2, 1, 0}}) {
          data[static_cast<std::size_t>((idx[p[0]] * n + idx[p[1]]) * n + idx[p[2]])] = s;
        }
      }
  return Tensor3(n, std::move(data));
}

Tensor3 Tensor3::from_slices(const std::vector<Matrix>& sl) {
  const auto n = static_cast<Eigen::Index>(sl.size());
  std::vector<double> data(static_cast<std::size_t>(n * n * n));
  for (Eigen::Index a = 0; a < n; ++a) {
    const Matrix& m = sl[static_cast<std::size_t>(a)];
    if (m.rows() != n || m.cols() != n) fail(ErrorCode::DimensionMismatch, "from_slices: slice not N x N");
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index c = 0; c < n; ++c) data[static_cast<std::size_t>((a * n + b) * n + c)] = m(b, c);
  }
  return Tensor3(n, std::move(data));
}

double Tensor3::norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

Tensor3 Tensor3::operator+(const Tensor3& other) const {
  if (other.n_ != n_) fail(ErrorCode::DimensionMismatch, "Tensor3: sizes differ");
  std::vector<double> out(data_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += other.data_[k];
  return Tensor3(n_, std::move(out));
}

Tensor3 Tensor3::scaled(double s) const {
  std::vector<double> out(data_);
  for (double& x : out) x *= s;
  return Tensor3(n_, std::move(out));
}

std::vector<Matrix> slices(const Tensor3& t) {
  const Eigen::Index n = t.size();
  std::vector<Matrix> out(static_cast<std::size_t>(n), Matrix(n, n));
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index c = 0; c < n; ++c) out[static_cast<std::size_t>(a)](b, c) = t(a, b, c);
  return out;
}

namespace {

Matrix weighted_sum(const std::vector<Matrix>& ms, const Vector& theta) {
  Matrix s = Matrix::Zero(ms.front().rows(), ms.front().cols());
  for (std::size_t k = 0; k < ms.size(); ++k) s += theta(static_cast<Eigen::Index>(k)) * ms[k];
  return s;
}

void check_theta(const Tensor3& t, const Vector& theta) {
  if (theta.size() != t.size()) fail(ErrorCode::DimensionMismatch, "theta length differs from N");
  if (!theta.allFinite()) fail(ErrorCode::InvalidArgument, "theta has non-finite entries");
}

ObservableMatrices build_observables(const std::vector<Matrix>& sl, const Matrix& m_theta,
                                     const Vector& theta, std::optional<ReductionPair> pair) {
  std::vector<Matrix> reduced;
  reduced.reserve(sl.size());
  for (const Matrix& m : sl) {
    reduced.push_back(pair ? Matrix(pair->left.transpose() * m * pair->right) : m);
  }
  const Matrix m_hat = weighted_sum(reduced, theta);
  std::vector<Matrix> out;
  out.reserve(sl.size());
  for (const Matrix& m : reduced) out.push_back(right_divide(m, m_hat, ErrorCode::RankDeficient));
  const Eigen::Index d = m_hat.rows();
  return ObservableMatrices{MatrixSet(d, std::move(out)), m_theta, std::move(pair)};
}

}  // namespace

ObservableMatrices observable_matrices(const Tensor3& t, Eigen::Index d, const Vector& theta) {
  check_theta(t, theta);
  const Eigen::Index n = t.size();
  if (d < 1 || d > n) fail(ErrorCode::InvalidArgument, "observable_matrices: need 1 <= d <= N");
  const std::vector<Matrix> sl = slices(t);
  const Matrix m_theta = weighted_sum(sl, theta);
  const Eigen::JacobiSVD<Matrix> svd(m_theta, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  if (!(sv(d - 1) > 1e-10 * sv(0))) {
    fail(ErrorCode::RankDeficient, "singular value " + std::to_string(d) + " of the theta pencil is " +
                                       std::to_string(sv(d - 1)) + " (largest " + std::to_string(sv(0)) + ")");
  }
  if (d == n) return build_observables(sl, m_theta, theta, std::nullopt);
  ReductionPair pair{svd.matrixU().leftCols(d), svd.matrixV().leftCols(d)};
  return build_observables(sl, m_theta, theta, std::move(pair));
}

ObservableMatrices observable_matrices(const Tensor3& t, Eigen::Index d,
                                       const CombinationVector& theta) {
  return observable_matrices(t, d, theta.values());
}

ObservableMatrices observable_matrices(const Tensor3& t, const Vector& theta,
                                       const ReductionPair& pair) {
  check_theta(t, theta);
  const Eigen::Index n = t.size();
  const Eigen::Index d = pair.left.cols();
  if (pair.left.rows() != n || pair.right.rows() != n || pair.right.cols() != d || d < 1 || d > n) {
    fail(ErrorCode::DimensionMismatch, "observable_matrices: reduction pair must be N x d");
  }
  const Matrix id = Matrix::Identity(d, d);
  if ((pair.left.transpose() * pair.left - id).norm() > 1e-10 ||
      (pair.right.transpose() * pair.right - id).norm() > 1e-10) {
    fail(ErrorCode::InvalidArgument, "observable_matrices: reduction pair not column-orthonormal");
  }
  const std::vector<Matrix> sl = slices(t);
  return build_observables(sl, weighted_sum(sl, theta), theta, pair);
}

namespace {

void check_square_components(const ComponentMatrix& z) {
  if (z.rows() != z.cols() || z.rows() < 1) fail(ErrorCode::DimensionMismatch, "Z must be square (N = d)");
  if (!std::isfinite(condition_number(z))) fail(ErrorCode::SingularZ, "Z is singular");
}

double min_abs_column_sum(const ComponentMatrix& z) {
  const double m = z.colwise().sum().cwiseAbs().minCoeff();
  if (!(m > 1e-14 * std::max(z.cwiseAbs().maxCoeff(), 1e-300))) {
    fail(ErrorCode::ZeroColumnSum, "a column of Z sums to zero");
  }
  return m;
}

}  // namespace

double m_norm_bound(const ComponentMatrix& z) {
  check_square_components(z);
  const double kappa = condition_number(z);
  const double d = static_cast<double>(z.cols());
  return d * kappa * kappa * z.cwiseAbs().maxCoeff() / min_abs_column_sum(z);
}

double w_norm_bound(const ComponentMatrix& z, double eps) {
  const double m_bound = m_norm_bound(z);
  const MatrixMetrics mm = matrix_metrics(z);
  const double d = static_cast<double>(z.cols());
  return eps * mm.condition * mm.condition * std::sqrt(d) /
         (mm.spectral * mm.spectral * min_abs_column_sum(z)) * (1.0 + m_bound);
}

FirstOrderModel first_order_model(const ComponentMatrix& z, const Tensor3& noise) {
  check_square_components(z);
  const Eigen::Index n = z.rows();
  if (noise.size() != n) fail(ErrorCode::DimensionMismatch, "noise tensor size differs from N");
  const Vector col_sums = z.colwise().sum().transpose();
  min_abs_column_sum(z);

  const std::vector<Matrix> e_sl = slices(noise);
  const Vector ones = Vector::Ones(n);
  const Matrix m = Matrix(z * col_sums.asDiagonal() * z.transpose());
  const Matrix e_minv = right_divide(weighted_sum(e_sl, ones), m, ErrorCode::SingularZ);

  FirstOrderModel out;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vector ratio = z.row(k).transpose().cwiseQuotient(col_sums);
    Matrix mk = right_divide(Matrix(z * ratio.asDiagonal()), z, ErrorCode::SingularZ);
    const Matrix ek_minv = right_divide(e_sl[static_cast<std::size_t>(k)], m, ErrorCode::SingularZ);
    out.w.push_back(ek_minv - mk * e_minv);
    out.m.push_back(std::move(mk));
  }
  out.m_bound = m_norm_bound(z);
  out.w_bound = w_norm_bound(z, noise.norm());
  return out;
}

ComponentMatrix estimate_components(const OrthogonalFrame& u, const MatrixSet& set) {
  if (u.dim() != set.dim()) fail(ErrorCode::DimensionMismatch, "estimate_components: d differs");
  const Matrix& q = u.matrix();
  ComponentMatrix y(static_cast<Eigen::Index>(set.size()), set.dim());
  for (std::size_t k = 0; k < set.size(); ++k) {
    y.row(static_cast<Eigen::Index>(k)) = (q.transpose() * set[k] * q).diagonal().transpose();
  }
  return y;
}

ComponentMatrix normalize_components(const ComponentMatrix& z, const Vector& theta) {
  if (theta.size() != z.rows()) fail(ErrorCode::DimensionMismatch, "theta length differs from N");
  const Vector c = z.transpose() * theta;
  if (!(c.cwiseAbs().minCoeff() > 1e-14 * std::max(z.cwiseAbs().maxCoeff(), 1e-300))) {
    fail(ErrorCode::ZeroColumnSum, "theta^T Z has a zero entry");
  }
  return z * c.cwiseInverse().asDiagonal();
}

ComponentMatrix recover_scales(const Matrix& m_theta, const ComponentMatrix& y, const Vector& theta) {
  const Eigen::Index n = y.rows();
  const Eigen::Index d = y.cols();
  if (m_theta.rows() != n || m_theta.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "recover_scales: m_theta must be N x N");
  }
  if (theta.size() != n) fail(ErrorCode::DimensionMismatch, "recover_scales: theta length differs from N");
  if (d < 1 || d > n) fail(ErrorCode::DimensionMismatch, "recover_scales: Y must be N x d with d <= N");
  const Eigen::JacobiSVD<Matrix> svd(y);
  const Vector& sv = svd.singularValues();
  if (!(sv(d - 1) > 1e-12 * sv(0))) fail(ErrorCode::SingularY, "Y does not have full column rank");

  const Eigen::ColPivHouseholderQR<Matrix> qr(y);
  const Matrix a = qr.solve(m_theta);                  // Y^+ m_theta, d x N
  const Matrix b = qr.solve(Matrix(a.transpose()));    // Y^+ (Y^+ m_theta)^T, d x d
  Vector s(d);
  for (Eigen::Index i = 0; i < d; ++i) s(i) = std::cbrt(b(i, i));
  return y * s.asDiagonal();
}

ComponentMatrix recover_scales(const Matrix& m_theta, const ComponentMatrix& y,
                               const CombinationVector& theta) {
  return recover_scales(m_theta, y, theta.values());
}

double component_eigengap(const ComponentMatrix& z) {
  return joint_eigengap(z) / static_cast<double>(z.rows());
}

ComponentBound component_error_bound(const ComponentMatrix& z, double eps, double sigma) {
  check_square_components(z);
  if (!(eps >= 0.0) || !(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "eps and sigma must be >= 0");
  ComponentBound out;
  out.gamma = component_eigengap(z);
  if (!(out.gamma > 0.0)) fail(ErrorCode::DegenerateSpectrum, "component gap is zero");
  out.kappa = condition_number(z);
  out.m_const = m_norm_bound(z);
  out.w_const = w_norm_bound(z, eps);
  const double d = static_cast<double>(z.cols());
  const double n = static_cast<double>(z.rows());
  const double core = 4.0 * sigma * std::sqrt(d * (d - 1.0)) * std::pow(out.kappa, 4) / out.gamma *
                      out.m_const * out.m_const * out.w_const;
  const double tail = sigma * out.w_const;
  out.statement = (d > 1.0 ? core : 0.0) + tail;
  out.proof = (d > 1.0 ? n * core : 0.0) + tail;
  return out;
}

ColumnMatch match_columns(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    fail(ErrorCode::DimensionMismatch, "match_columns: shapes differ");
  }
  const Eigen::Index d = truth.cols();
  if (d > 8) fail(ErrorCode::TooLarge, "match_columns: exhaustive search limited to d <= 8");
  Matrix cost(d, d);  // cost(i, j): truth column i vs estimate column j
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) cost(i, j) = (truth.col(i) - estimate.col(j)).cwiseAbs().sum();

  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  ColumnMatch out;
  out.perm = best;
  out.aligned = Matrix(truth.rows(), d);
  for (Eigen::Index i = 0; i < d; ++i) out.aligned.col(i) = estimate.col(best[static_cast<std::size_t>(i)]);
  out.max_error = d > 0 ? (out.aligned - truth).cwiseAbs().maxCoeff() : 0.0;
  return out;
}

}  // namespace jschur
