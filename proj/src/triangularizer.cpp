#include "jschur/triangularizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "jschur/random.hpp"

namespace jschur {

MatrixSet::MatrixSet(Eigen::Index d, std::vector<Matrix> matrices)
    : d_(d), matrices_(std::move(matrices)) {
  if (d_ < 1) fail(ErrorCode::InvalidArgument, "MatrixSet: d must be positive");
  if (matrices_.empty()) fail(ErrorCode::InvalidArgument, "MatrixSet: N must be positive");
  for (const Matrix& m : matrices_) {
    if (m.rows() != d_ || m.cols() != d_) {
      fail(ErrorCode::DimensionMismatch, "MatrixSet: matrix is not d x d");
    }
    if (!m.allFinite()) fail(ErrorCode::InvalidArgument, "MatrixSet: non-finite entry");
  }
}

MatrixSet::MatrixSet(std::vector<Matrix> matrices)
    : MatrixSet(matrices.empty() ? 0 : matrices.front().rows(), std::move(matrices)) {}

Matrix MatrixSet::combine(const Vector& weights) const {
  if (weights.size() != static_cast<Eigen::Index>(matrices_.size())) {
    fail(ErrorCode::DimensionMismatch, "MatrixSet::combine: weight count differs from N");
  }
  Matrix out = Matrix::Zero(d_, d_);
  for (std::size_t n = 0; n < matrices_.size(); ++n) {
    out += weights(static_cast<Eigen::Index>(n)) * matrices_[n];
  }
  return out;
}

CombinationVector::CombinationVector(Vector beta) : beta_(std::move(beta)) {
  if (beta_.size() == 0) fail(ErrorCode::InvalidArgument, "CombinationVector: empty");
  if (!(std::abs(beta_.norm() - 1.0) <= kTolerance)) {
    fail(ErrorCode::NonUnitBeta, "||beta|| = " + std::to_string(beta_.norm()));
  }
}

CombinationVector CombinationVector::ones(Eigen::Index n) {
  return normalized(Vector::Ones(n));
}

CombinationVector CombinationVector::normalized(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) fail(ErrorCode::InvalidArgument, "CombinationVector: zero vector");
  return CombinationVector(v / norm);
}

void OptimizerConfig::validate() const {
  if (max_iters < 0) fail(ErrorCode::InvalidArgument, "max_iters must be non-negative");
  if (!(grad_tol > 0.0)) fail(ErrorCode::InvalidArgument, "grad_tol must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail(ErrorCode::InvalidArgument, "armijo_c must lie in (0,1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    fail(ErrorCode::InvalidArgument, "backtrack_factor must lie in (0,1)");
  }
  if (!(initial_step > 0.0)) fail(ErrorCode::InvalidArgument, "initial_step must be positive");
}

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::GradientTolerance: return "grad_tol";
    case Termination::MaxIters: return "max_iters";
    case Termination::Stalled: return "stalled";
  }
  return "max_iters";
}

namespace {

void check_dims(const OrthogonalFrame& u, const MatrixSet& set) {
  if (u.dim() != set.dim()) fail(ErrorCode::DimensionMismatch, "frame and matrix set differ in d");
}

}  // namespace

double loss(const OrthogonalFrame& u, const MatrixSet& set) {
  check_dims(u, set);
  const Matrix& q = u.matrix();
  double total = 0.0;
  for (const Matrix& m : set.matrices()) {
    const Matrix t = q.transpose() * m * q;
    total += t.triangularView<Eigen::StrictlyLower>().toDenseMatrix().squaredNorm();
  }
  return total;
}

SkewDirection gradient(const OrthogonalFrame& u, const MatrixSet& set) {
  check_dims(u, set);
  const Matrix& q = u.matrix();
  const Eigen::Index d = set.dim();
  Matrix s = Matrix::Zero(d, d);
  for (const Matrix& m : set.matrices()) {
    const Matrix t = q.transpose() * m * q;
    s += commutator(t.transpose(), low_part(t));
  }
  return SkewDirection(Matrix(s - s.transpose()));
}

double hessian_form(const OrthogonalFrame& u, const MatrixSet& set, const SkewDirection& x) {
  check_dims(u, set);
  if (x.dim() != set.dim()) fail(ErrorCode::DimensionMismatch, "direction and matrix set differ in d");
  const Matrix& q = u.matrix();
  const Matrix& xm = x.matrix();
  double total = 0.0;
  for (const Matrix& m : set.matrices()) {
    const Matrix t = q.transpose() * m * q;
    const Matrix tx = commutator(t, xm);
    const Matrix g = low_part(t);
    const Matrix g_dot = low_part(tx);
    const Matrix g_ddot = low_part(commutator(tx, xm));
    total += 2.0 * g_dot.squaredNorm() + 2.0 * (g_ddot.array() * g.array()).sum();
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

// Minimal eigenvalue gap of the pencil, or a negative value when its spectrum
// is complex or not separated.
double pencil_gap(const MatrixSet& set, const Vector& beta) {
  const Matrix m = set.combine(beta);
  try {
    const EigenSystem eig = real_eigen(m);
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 1; k < eig.values.size(); ++k) {
      gap = std::min(gap, eig.values(k) - eig.values(k - 1));
    }
    if (eig.values.size() < 2) gap = m.norm();
    return gap > 1e-8 * m.norm() ? gap : -1.0;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ComplexEigenvalues || e.code() == ErrorCode::NearDefective) return -1.0;
    throw;
  }
}

}  // namespace

SeparatingBeta find_separating_beta(const MatrixSet& set, BetaStrategy strategy,
                                    std::uint64_t seed, int max_tries) {
  const auto n = static_cast<Eigen::Index>(set.size());
  Rng rng(seed);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Vector beta;
    if (strategy == BetaStrategy::Ones && attempt == 0) {
      beta = CombinationVector::ones(n).values();
    } else {
      Vector g = rng.gaussian_vector(n);
      while (g.norm() == 0.0) g = rng.gaussian_vector(n);
      beta = g.normalized();
    }
    const double gap = pencil_gap(set, beta);
    if (gap > 0.0) {
      return SeparatingBeta{CombinationVector(beta), gap, attempt + 1};
    }
  }
  fail(ErrorCode::NoSeparatingBeta,
       "no pencil with separated real eigenvalues after " + std::to_string(max_tries) + " tries");
}

OrthogonalFrame schur_initializer(const MatrixSet& set, const CombinationVector& beta) {
  return ordered_schur(set.combine(beta.values())).u;
}

DescentResult descend(const MatrixSet& set, const OrthogonalFrame& u_init,
                      const OptimizerConfig& config) {
  config.validate();
  check_dims(u_init, set);

  Matrix u = u_init.matrix();
  double f = loss(u_init, set);
  SkewDirection g = gradient(u_init, set);
  double g_norm = g.norm();

  DescentTrace trace;
  trace.steps.push_back({f, g_norm, 0.0});

  for (;;) {
    if (g_norm <= config.grad_tol) {
      trace.termination = Termination::GradientTolerance;
      break;
    }
    if (static_cast<int>(trace.iterations()) >= config.max_iters) {
      trace.termination = Termination::MaxIters;
      break;
    }
    const SkewDirection direction(Matrix(-g.matrix() / g_norm));
    double step = config.initial_step;
    bool stalled = false;
    for (;;) {
      const OrthogonalFrame candidate(u * skew_exp(direction, step).matrix());
      const double f_new = loss(candidate, set);
      if (f_new <= f - config.armijo_c * step * g_norm) {
        u = candidate.matrix();
        f = f_new;
        break;
      }
      step *= config.backtrack_factor;
      if (step < 1e-16) {
        if (config.stop_on_stall) {
          stalled = true;
          break;
        }
        fail(ErrorCode::LineSearchStalled,
             "Armijo backtracking underflow at loss " + std::to_string(f) +
                 ", gradient norm " + std::to_string(g_norm));
      }
    }
    if (stalled) {
      trace.termination = Termination::Stalled;
      break;
    }
    const OrthogonalFrame current(u);
    g = gradient(current, set);
    g_norm = g.norm();
    trace.steps.push_back({f, g_norm, step});
  }
  return DescentResult{OrthogonalFrame(std::move(u)), std::move(trace)};
}

Matrix loss_jacobian(const Matrix& t) {
  const Eigen::Index d = t.rows();
  const LowProjector proj = build_low_projector(d);
  const Eigen::Index m = lower_count(d);
  Matrix jac(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    Vector unit = Vector::Zero(m);
    unit(k) = 1.0;
    const Matrix e = proj.embed(unit);
    jac.col(k) = proj.select(commutator(t, Matrix(e - e.transpose())));
  }
  return jac;
}

OrthogonalFrame gauss_newton_refine(const MatrixSet& set, const OrthogonalFrame& u,
                                    int max_iters, double step_tol) {
  check_dims(u, set);
  const Eigen::Index d = set.dim();
  if (d < 2) return u;
  const LowProjector proj = build_low_projector(d);
  const Eigen::Index m = lower_count(d);
  Matrix q = u.matrix();
  double f = loss(u, set);
  for (int it = 0; it < max_iters; ++it) {
    Matrix normal = Matrix::Zero(m, m);
    Vector rhs = Vector::Zero(m);
    for (const Matrix& mat_n : set.matrices()) {
      const Matrix t = q.transpose() * mat_n * q;
      const Matrix jac = loss_jacobian(t);
      normal += jac.transpose() * jac;
      rhs += jac.transpose() * proj.select(t);
    }
    const Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success) break;
    const Vector x = -ldlt.solve(rhs);
    if (!x.allFinite()) break;
    const Matrix e = proj.embed(x);
    const OrthogonalFrame candidate(q * skew_exp(SkewDirection(Matrix(e - e.transpose()))).matrix());
    const double f_new = loss(candidate, set);
    if (f_new > f * (1.0 + 1e-12) + 1e-300) break;
    q = candidate.matrix();
    f = f_new;
    if (x.norm() <= step_tol) break;
  }
  return OrthogonalFrame(std::move(q));
}

}  // namespace jschur
