#include "jschur/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace jschur {

void GroundTruthModel::validate() const {
  const Eigen::Index d = v.rows();
  if (d < 1 || v.cols() != d) fail(ErrorCode::DimensionMismatch, "ground truth: V must be square");
  if (lambda.rows() < 1 || lambda.cols() != d) {
    fail(ErrorCode::DimensionMismatch, "ground truth: lambda must be N x d");
  }
  if (noise.size() != count()) fail(ErrorCode::DimensionMismatch, "ground truth: need one W_n per matrix");
  if (!v.allFinite() || !lambda.allFinite()) fail(ErrorCode::InvalidArgument, "ground truth: non-finite entry");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::InvalidArgument, "ground truth: sigma must be >= 0");
  for (const Matrix& w : noise) {
    if (w.rows() != d || w.cols() != d) fail(ErrorCode::DimensionMismatch, "ground truth: W_n must be d x d");
    if (!w.allFinite()) fail(ErrorCode::InvalidArgument, "ground truth: non-finite noise");
    if (w.norm() > 1.0 + 1e-12) fail(ErrorCode::InvalidArgument, "ground truth: ||W_n|| exceeds 1");
  }
  if (!std::isfinite(condition_number(v))) fail(ErrorCode::InvalidArgument, "ground truth: V is singular");
  const std::vector<Matrix> m = clean_matrices();
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = a + 1; b < m.size(); ++b) {
      const double c = commutator(m[a], m[b]).norm();
      if (c > 1e-10 * std::max(m[a].norm() * m[b].norm(), 1e-300)) {
        fail(ErrorCode::InvalidArgument, "ground truth: M_n do not commute");
      }
    }
  }
}

std::vector<Matrix> GroundTruthModel::clean_matrices() const {
  std::vector<Matrix> out;
  out.reserve(count());
  for (Eigen::Index n = 0; n < lambda.rows(); ++n) {
    const Matrix scaled = v * lambda.row(n).transpose().asDiagonal();
    out.push_back(right_divide(scaled, v, ErrorCode::InvalidArgument));
  }
  return out;
}

MatrixSet GroundTruthModel::clean_set() const { return MatrixSet(dim(), clean_matrices()); }

MatrixSet GroundTruthModel::observed_set() const {
  std::vector<Matrix> m = clean_matrices();
  for (std::size_t n = 0; n < m.size(); ++n) m[n] += sigma * noise[n];
  return MatrixSet(dim(), std::move(m));
}

double joint_eigengap(const Matrix& lambda) {
  double gamma = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambda.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < lambda.cols(); ++j) {
      gamma = std::min(gamma, (lambda.col(i) - lambda.col(j)).squaredNorm());
    }
  }
  return gamma;
}

Matrix lower_commutator_operator(const Matrix& a) {
  const Eigen::Index d = a.rows();
  const Eigen::Index m = lower_count(d);
  // Column k is the image of the k-th strictly lower unit matrix E_ij:
  // [A, E_ij] = A e_i e_j^T - e_i e_j^T A, then keep the strictly lower part.
  Matrix op = Matrix::Zero(m, m);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> slots;
  slots.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = j + 1; i < d; ++i) slots.emplace_back(i, j);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto [i, j] = slots[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto [p, q] = slots[static_cast<std::size_t>(r)];
      double value = 0.0;
      if (q == j) value += a(p, i);  // (A E_ij)_pq = A_pi [q == j]
      if (p == i) value -= a(j, q);  // (E_ij A)_pq = [p == i] A_jq
      op(r, k) = value;
    }
  }
  return op;
}

OperatorBundle assemble_t_tilde(const OrthogonalFrame& u, const MatrixSet& set,
                                const std::optional<CombinationVector>& beta) {
  if (u.dim() != set.dim()) fail(ErrorCode::DimensionMismatch, "assemble_t_tilde: d differs");
  if (beta && beta->size() != static_cast<Eigen::Index>(set.size())) {
    fail(ErrorCode::DimensionMismatch, "assemble_t_tilde: beta length differs from N");
  }
  const Matrix& q = u.matrix();
  const Eigen::Index m = lower_count(set.dim());
  OperatorBundle out;
  out.t_tilde_sum = Matrix::Zero(m, m);
  if (beta) out.t_beta = Matrix::Zero(m, m);
  for (std::size_t n = 0; n < set.size(); ++n) {
    Matrix t = lower_commutator_operator(q.transpose() * set[n] * q);
    out.t_tilde_sum += t.transpose() * t;
    if (beta) *out.t_beta += beta->values()(static_cast<Eigen::Index>(n)) * t;
    out.t_tilde.push_back(std::move(t));
  }
  out.t_tilde_sum = 0.5 * (out.t_tilde_sum + out.t_tilde_sum.transpose()).eval();
  if (m > 0) {
    const Eigen::JacobiSVD<Matrix> svd(out.t_tilde_sum);
    out.sigma_max = svd.singularValues()(0);
    out.sigma_min = svd.singularValues()(m - 1);
  }
  return out;
}

namespace {

double sum_squared_norms(const std::vector<Matrix>& ms) {
  double s = 0.0;
  for (const Matrix& m : ms) s += m.squaredNorm();
  return s;
}

void require_exact_triangularizer(const std::vector<Matrix>& clean, const OrthogonalFrame& u) {
  const Matrix& q = u.matrix();
  for (const Matrix& m : clean) {
    const double residual = low_part(q.transpose() * m * q).norm();
    if (residual > 1e-8 * std::max(1.0, m.norm())) {
      fail(ErrorCode::InvalidArgument,
           "frame does not triangularize the noise-free matrices (residual " +
               std::to_string(residual) + ")");
    }
  }
}

void require_dims(const GroundTruthModel& gt, const OrthogonalFrame& u) {
  if (u.dim() != gt.dim()) fail(ErrorCode::DimensionMismatch, "frame and model differ in d");
}

}  // namespace

double a_priori_bound(const GroundTruthModel& gt, const OrthogonalFrame& u_circ) {
  require_dims(gt, u_circ);
  const std::vector<Matrix> clean = gt.clean_matrices();
  require_exact_triangularizer(clean, u_circ);
  if (gt.dim() < 2) return 0.0;
  const OperatorBundle ops = assemble_t_tilde(u_circ, MatrixSet(gt.dim(), clean));
  const double inv = inverse_spectral_norm(ops.t_tilde_sum);
  return 2.0 * std::numbers::sqrt2 * gt.sigma * inv * std::sqrt(sum_squared_norms(clean)) *
         std::sqrt(sum_squared_norms(gt.noise));
}

ExplicitBound explicit_bound(const GroundTruthModel& gt) {
  ExplicitBound out;
  out.gamma = joint_eigengap(gt.lambda);
  out.kappa = condition_number(gt.v);
  if (!(out.gamma > 0.0)) fail(ErrorCode::DegenerateSpectrum, "explicit_bound: gamma = 0");
  const double d = static_cast<double>(gt.dim());
  if (gt.dim() < 2) return out;
  const std::vector<Matrix> clean = gt.clean_matrices();
  out.alpha = 2.0 * gt.sigma * std::sqrt(d * (d - 1.0)) * std::pow(out.kappa, 4) / out.gamma *
              std::sqrt(sum_squared_norms(clean)) * std::sqrt(sum_squared_norms(gt.noise));
  return out;
}

SkewDirection predicted_direction(const GroundTruthModel& gt, const OrthogonalFrame& u_circ) {
  require_dims(gt, u_circ);
  const Eigen::Index d = gt.dim();
  if (d < 2) return SkewDirection::zero(d);
  const std::vector<Matrix> clean = gt.clean_matrices();
  const OperatorBundle ops = assemble_t_tilde(u_circ, MatrixSet(d, clean));
  inverse_spectral_norm(ops.t_tilde_sum);  // throws SingularOperator

  const LowProjector proj = build_low_projector(d);
  const Matrix& q = u_circ.matrix();
  Vector rhs = Vector::Zero(lower_count(d));
  for (std::size_t n = 0; n < gt.count(); ++n) {
    rhs += ops.t_tilde[n].transpose() * proj.select(q.transpose() * gt.noise[n] * q);
  }
  const Vector x = -gt.sigma * ops.t_tilde_sum.ldlt().solve(rhs);
  return SkewDirection::from_lower(proj.embed(x));
}

double a_posteriori_bound(const MatrixSet& set, const OrthogonalFrame& u, const Vector& beta,
                          double sigma) {
  if (beta.size() != static_cast<Eigen::Index>(set.size())) {
    fail(ErrorCode::DimensionMismatch, "a_posteriori_bound: beta length differs from N");
  }
  if (!(std::abs(beta.norm() - 1.0) <= CombinationVector::kTolerance)) {
    fail(ErrorCode::NonUnitBeta, "a_posteriori_bound: ||beta|| = " + std::to_string(beta.norm()));
  }
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "a_posteriori_bound: sigma must be >= 0");
  if (u.dim() != set.dim()) fail(ErrorCode::DimensionMismatch, "a_posteriori_bound: d differs");
  if (set.dim() < 2) return 0.0;
  const Matrix& q = u.matrix();
  const Matrix t_beta = lower_commutator_operator(q.transpose() * set.combine(beta) * q);
  const double inv = inverse_spectral_norm(t_beta);
  const double n = static_cast<double>(set.size());
  return std::numbers::sqrt2 * beta.norm() * inv * (std::sqrt(loss(u, set)) + sigma * std::sqrt(n));
}

double a_posteriori_bound(const MatrixSet& set, const OrthogonalFrame& u,
                          const CombinationVector& beta, double sigma) {
  return a_posteriori_bound(set, u, beta.values(), sigma);
}

InitThreshold init_noise_threshold(const GroundTruthModel& gt, const CombinationVector& beta,
                                   const OrthogonalFrame& u_init) {
  require_dims(gt, u_init);
  if (beta.size() != static_cast<Eigen::Index>(gt.count())) {
    fail(ErrorCode::DimensionMismatch, "init_noise_threshold: beta length differs from N");
  }
  InitThreshold c;
  c.gamma = joint_eigengap(gt.lambda);
  if (!(c.gamma > 0.0)) fail(ErrorCode::DegenerateSpectrum, "init_noise_threshold: gamma = 0");
  c.kappa = condition_number(gt.v);
  c.epsilon = c.gamma / (2.0 * std::pow(c.kappa, 4));
  const double m2 = sum_squared_norms(gt.clean_matrices());
  const double n = static_cast<double>(gt.count());
  c.a_alpha = 32.0 * m2;
  c.a_sigma = 16.0 * std::sqrt(n) * std::sqrt(m2);

  const Matrix& q = u_init.matrix();
  const Matrix t_beta =
      lower_commutator_operator(q.transpose() * gt.observed_set().combine(beta.values()) * q);
  c.t_beta_inv_norm = inverse_spectral_norm(t_beta);
  c.sigma_max = 2.0 * c.epsilon / (std::sqrt(2.0 * n) * c.t_beta_inv_norm * c.a_alpha + c.a_sigma);
  c.alpha_max = alpha_max_at(c, gt.sigma);
  c.alpha_init = std::sqrt(2.0 * n) * gt.sigma * c.t_beta_inv_norm;
  return c;
}

double alpha_max_at(const InitThreshold& c, double sigma) {
  return (2.0 * c.epsilon - sigma * c.a_sigma) / c.a_alpha;
}

double eigenvalue_error_bound(double alpha, double sigma, double m_norm, double w_norm) {
  return 2.0 * alpha * m_norm + sigma * w_norm;
}

BoundReport bound_report(const GroundTruthModel& gt, const OrthogonalFrame& u,
                         const OrthogonalFrame& u_circ, const CombinationVector& beta,
                         const OrthogonalFrame& u_init) {
  BoundReport r;
  const MatrixSet observed = gt.observed_set();
  r.alpha_apriori = a_priori_bound(gt, u_circ);
  const ExplicitBound eb = explicit_bound(gt);
  r.alpha_explicit = eb.alpha;
  r.alpha_aposteriori = a_posteriori_bound(observed, u, beta, gt.sigma);
  const InitThreshold it = init_noise_threshold(gt, beta, u_init);
  r.gamma = it.gamma;
  r.kappa = it.kappa;
  r.epsilon = it.epsilon;
  r.a_alpha = it.a_alpha;
  r.a_sigma = it.a_sigma;
  r.alpha_max = std::max(0.0, it.alpha_max);
  r.sigma_max = it.sigma_max;
  r.t_tilde_sigma_min = assemble_t_tilde(u_circ, gt.clean_set()).sigma_min;
  r.predicted_direction = predicted_direction(gt, u_circ);

  const Matrix rel = u_circ.matrix().transpose() * u.matrix();
  const double alpha = orthogonal_log(OrthogonalFrame(rel)).norm();
  r.observed_alpha = alpha;
  const std::vector<Matrix> clean = gt.clean_matrices();
  for (std::size_t n = 0; n < clean.size(); ++n) {
    r.eigenvalue_error = std::max(
        r.eigenvalue_error, eigenvalue_error_bound(alpha, gt.sigma, clean[n].norm(), gt.noise[n].norm()));
  }
  return r;
}

}  // namespace jschur
