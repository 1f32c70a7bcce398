#pragma once

// Approximate joint triangularization: the off-triangular loss over the
// orthogonal group, its Riemannian gradient and Hessian quadratic form,
// pencil-based Schur initialization, and first-order descent.

#include <cstdint>
#include <string>
#include <vector>

#include "jschur/linalg.hpp"

namespace jschur {

/// N real d x d matrices sharing one dimension.
class MatrixSet {
 public:
  MatrixSet(Eigen::Index d, std::vector<Matrix> matrices);
  explicit MatrixSet(std::vector<Matrix> matrices);

  Eigen::Index dim() const { return d_; }
  std::size_t size() const { return matrices_.size(); }
  const Matrix& operator[](std::size_t n) const { return matrices_[n]; }
  const std::vector<Matrix>& matrices() const { return matrices_; }

  /// sum_n w_n M_n
  Matrix combine(const Vector& weights) const;

 private:
  Eigen::Index d_;
  std::vector<Matrix> matrices_;
};

/// Unit-norm weight vector over the N matrices of a set.
class CombinationVector {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Throws NonUnitBeta unless | ||beta|| - 1 | <= kTolerance.
  explicit CombinationVector(Vector beta);
  /// The ones vector scaled to unit norm.
  static CombinationVector ones(Eigen::Index n);
  /// Normalizes an arbitrary nonzero vector.
  static CombinationVector normalized(const Vector& v);

  const Vector& values() const { return beta_; }
  Eigen::Index size() const { return beta_.size(); }

 private:
  Vector beta_;
};

struct OptimizerConfig {
  int max_iters = 500;
  double grad_tol = 1e-12;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double initial_step = 1.0;
  /// When set, a line-search underflow ends the run (tag "stalled") instead of
  /// throwing LineSearchStalled.
  bool stop_on_stall = false;

  void validate() const;
};

struct DescentStep {
  double loss = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;  // accepted step length; 0 for the initial record
};

enum class Termination { GradientTolerance, MaxIters, Stalled };

std::string termination_name(Termination t);

struct DescentTrace {
  std::vector<DescentStep> steps;  // steps[0] describes U_init
  Termination termination = Termination::MaxIters;

  std::size_t iterations() const { return steps.empty() ? 0 : steps.size() - 1; }
};

struct DescentResult {
  OrthogonalFrame u;
  DescentTrace trace;
};

/// sum_n ||low(U^T M_n U)||_F^2
double loss(const OrthogonalFrame& u, const MatrixSet& set);

/// Riemannian gradient S - S^T with S = sum_n [T_n^T, low(T_n)], T_n = U^T M_n U,
/// so that d/dt loss(U exp(tX)) at t=0 equals <gradient, X> = Tr(G^T X).
SkewDirection gradient(const OrthogonalFrame& u, const MatrixSet& set);

/// Second derivative of t -> loss(U exp(tX)) at t = 0.
double hessian_form(const OrthogonalFrame& u, const MatrixSet& set, const SkewDirection& x);

enum class BetaStrategy { Ones, Random };

struct SeparatingBeta {
  CombinationVector beta;
  double gap = 0.0;  // minimal eigenvalue gap of sum_n beta_n M_n
  int tries = 0;
};

/// Finds unit weights whose pencil has real eigenvalues separated by more
/// than 1e-8 * ||M_beta||_F. `Ones` tries the normalized ones vector first,
/// then seeded random directions; `Random` starts with random directions.
SeparatingBeta find_separating_beta(const MatrixSet& set, BetaStrategy strategy,
                                    std::uint64_t seed, int max_tries);

/// Ascending ordered Schur factor of the pencil sum_n beta_n M_n.
OrthogonalFrame schur_initializer(const MatrixSet& set, const CombinationVector& beta);

/// First-order descent U <- U exp(-t G/||G||) with Armijo backtracking.
/// Throws LineSearchStalled when the step underflows below 1e-16.
DescentResult descend(const MatrixSet& set, const OrthogonalFrame& u_init,
                      const OptimizerConfig& config);

/// Jacobian of x -> P_low vec(low([T, E - E^T])), E = mat(P_low^T x), for
/// T = U^T M U. Rows and columns both index strictly-lower positions.
Matrix loss_jacobian(const Matrix& t);

/// Gauss-Newton iterations U <- U skew_exp(E - E^T) on the linearized
/// residuals. Stops after `max_iters`, when the step norm drops below
/// `step_tol`, or when a step would raise the loss.
OrthogonalFrame gauss_newton_refine(const MatrixSet& set, const OrthogonalFrame& u,
                                    int max_iters = 20, double step_tol = 1e-15);

}  // namespace jschur
