#pragma once

// Perturbation bounds on the distance alpha between an approximate joint
// triangularizer U = U0 exp(alpha X) and an exact triangularizer U0 of the
// noise-free matrices.
//
// Functions taking a GroundTruthModel may use the unobservable V, Lambda and
// W_n; the a posteriori bound takes only observed data.

#include <optional>
#include <vector>

#include "jschur/linalg.hpp"
#include "jschur/triangularizer.hpp"

namespace jschur {

/// M_hat_n = V diag(lambda row n) V^{-1} + sigma W_n.
struct GroundTruthModel {
  Matrix v;                   // d x d, invertible
  Matrix lambda;              // N x d, row n holds the eigenvalues of M_n
  std::vector<Matrix> noise;  // W_n, ||W_n||_F <= 1
  double sigma = 0.0;

  Eigen::Index dim() const { return v.rows(); }
  std::size_t count() const { return static_cast<std::size_t>(lambda.rows()); }

  /// Checks shapes, finiteness, noise norms and commutativity of the M_n.
  void validate() const;

  /// Noise-free matrices M_n.
  std::vector<Matrix> clean_matrices() const;
  MatrixSet clean_set() const;
  /// M_n + sigma W_n.
  MatrixSet observed_set() const;
};

/// gamma = min_{i<i'} sum_n (Lambda_ni - Lambda_ni')^2; +infinity when d = 1.
double joint_eigengap(const Matrix& lambda);

/// Matrix of L -> low([A, L]) acting on the strictly-lower coordinates
/// (P_low vec(L)), i.e. P_low (1 (x) A - A^T (x) 1) P_low^T.
Matrix lower_commutator_operator(const Matrix& a);

struct OperatorBundle {
  std::vector<Matrix> t_tilde;  // one per matrix, size d(d-1)/2
  Matrix t_tilde_sum;           // sum_n t_n^T t_n
  double sigma_min = 0.0;       // extreme singular values of t_tilde_sum
  double sigma_max = 0.0;
  std::optional<Matrix> t_beta;  // sum_n beta_n t_n
};

/// Operators at U for the matrices of `set` (noise-free matrices for the a
/// priori bounds, observed ones for the a posteriori bound).
OperatorBundle assemble_t_tilde(const OrthogonalFrame& u, const MatrixSet& set,
                                const std::optional<CombinationVector>& beta = std::nullopt);

/// alpha <= 2 sqrt(2) sigma ||T^{-1}||_2 sqrt(sum ||M_n||^2) sqrt(sum ||W_n||^2).
/// u_circ must triangularize the noise-free matrices (residual <= 1e-8).
double a_priori_bound(const GroundTruthModel& gt, const OrthogonalFrame& u_circ);

struct ExplicitBound {
  double alpha = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
};

/// alpha <= 2 sigma sqrt(d(d-1)) kappa(V)^4 / gamma sqrt(sum ||M_n||^2) sqrt(sum ||W_n||^2).
ExplicitBound explicit_bound(const GroundTruthModel& gt);

/// First-order prediction of alpha X: E - E^T with E = mat(P_low^T x) and
/// x = -sigma T^{-1} sum_n t_n^T P_low vec(U0^T W_n U0).
SkewDirection predicted_direction(const GroundTruthModel& gt, const OrthogonalFrame& u_circ);

/// alpha <= sqrt(2) ||beta|| ||T_beta^{-1}||_2 (sqrt(L(U)) + sigma sqrt(N)),
/// T_beta built from the observed matrices at U. Throws NonUnitBeta.
double a_posteriori_bound(const MatrixSet& set, const OrthogonalFrame& u, const Vector& beta,
                          double sigma);
double a_posteriori_bound(const MatrixSet& set, const OrthogonalFrame& u,
                          const CombinationVector& beta, double sigma);

/// Constants certifying that the Schur initializer lies in the region where
/// the loss Hessian is positive definite.
struct InitThreshold {
  double sigma_max = 0.0;
  double alpha_max = 0.0;  // evaluated at gt.sigma
  double alpha_init = 0.0; // sqrt(2N) sigma ||T_beta^{-1}||, the init distance bound
  double epsilon = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double a_alpha = 0.0;
  double a_sigma = 0.0;
  double t_beta_inv_norm = 0.0;
};

InitThreshold init_noise_threshold(const GroundTruthModel& gt, const CombinationVector& beta,
                                   const OrthogonalFrame& u_init);

/// (2 epsilon - sigma A_sigma) / A_alpha
double alpha_max_at(const InitThreshold& c, double sigma);

/// |lambda_hat_i - lambda_i| <= 2 alpha ||M_n|| + sigma ||W_n||
double eigenvalue_error_bound(double alpha, double sigma, double m_norm, double w_norm);

struct BoundReport {
  double alpha_apriori = 0.0;
  double alpha_explicit = 0.0;
  double alpha_aposteriori = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double epsilon = 0.0;
  double a_alpha = 0.0;
  double a_sigma = 0.0;
  double alpha_max = 0.0;
  double sigma_max = 0.0;
  double t_tilde_sigma_min = 0.0;
  SkewDirection predicted_direction = SkewDirection::zero(0);
  double eigenvalue_error = 0.0;  // max over n of the eigenvalue bound at observed alpha
  std::optional<double> observed_alpha;
};

/// Every bound for a frame `u` computed on gt.observed_set(), measured
/// against the exact triangularizer `u_circ`.
BoundReport bound_report(const GroundTruthModel& gt, const OrthogonalFrame& u,
                         const OrthogonalFrame& u_circ, const CombinationVector& beta,
                         const OrthogonalFrame& u_init);

}  // namespace jschur
