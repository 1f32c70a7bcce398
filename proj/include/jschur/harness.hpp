#pragma once

// Synthetic models, the exact-triangularizer family, and the seeded studies
// that compare observed errors with the bounds.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jschur/bounds.hpp"
#include "jschur/tensor.hpp"
#include "jschur/triangularizer.hpp"

namespace jschur {

enum class NoiseStyle { Dense, Sparse };

std::string noise_style_name(NoiseStyle s);
NoiseStyle parse_noise_style(const std::string& s);

struct GeneratorSpec {
  Eigen::Index d = 3;
  Eigen::Index n = 3;
  double kappa_target = 1.0;
  double gamma_target = 1.0;
  NoiseStyle noise_style = NoiseStyle::Dense;
  std::uint64_t seed = 0;
  double sigma = 0.0;

  void validate() const;
};

/// V = Q1 diag(kappa^{i/(d-1)}) Q2, Lambda Gaussian rescaled to the target
/// gap, W_n with ||W_n||_F = 1.
GroundTruthModel gen_ground_truth(const GeneratorSpec& spec);

/// N noise matrices of unit Frobenius norm. Sparse puts d Gaussian entries
/// at random positions.
std::vector<Matrix> gen_noise(Eigen::Index d, Eigen::Index n, NoiseStyle style, std::uint64_t seed);

/// Copy of gt with fresh noise and the given sigma.
GroundTruthModel with_noise(const GroundTruthModel& gt, double sigma, NoiseStyle style,
                            std::uint64_t seed);

/// N x d components with kappa(Z) = kappa_target and every column sum at
/// least half the column norm.
ComponentMatrix gen_components(Eigen::Index n, Eigen::Index d, double kappa_target, std::uint64_t seed);

/// Gaussian tensor normalized to ||E|| = eps.
Tensor3 gen_noise_tensor(Eigen::Index n, double eps, std::uint64_t seed);

/// from_components(z) + sigma * gen_noise_tensor(N, eps, seed).
Tensor3 gen_tensor(const ComponentMatrix& z, double sigma, double eps, std::uint64_t seed);

struct TriangularizerFamily {
  std::vector<OrthogonalFrame> frames;
  std::vector<std::vector<int>> perms;  // column order of V used for frame k
  std::vector<Vector> signs;            // +-1 diagonal applied after QR

  std::size_t size() const { return frames.size(); }
};

/// All 2^d d! exact triangularizers. Throws DegenerateSpectrum, TooLarge (d > 5).
TriangularizerFamily enumerate_exact_triangularizers(const GroundTruthModel& gt);

struct NearestFrame {
  double alpha = 0.0;
  std::size_t index = 0;
};

/// Minimum of ||log(F^T U)||_F over family frames F with det(F^T U) = +1.
/// Throws NoComparableFrame.
NearestFrame distance_to_nearest(const OrthogonalFrame& u, const TriangularizerFamily& family);

struct PipelineConfig {
  OptimizerConfig optimizer;
  int refine_iters = 20;
  BetaStrategy beta = BetaStrategy::Ones;
  int beta_tries = 100;

  PipelineConfig();
};

struct PipelineResult {
  CombinationVector beta;
  OrthogonalFrame u_init;
  OrthogonalFrame u;
  DescentTrace trace;
};

/// Separating beta, Schur initializer, descent, Gauss-Newton polish.
PipelineResult run_pipeline(const MatrixSet& set, const PipelineConfig& config, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x); 0 with fewer than two points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SweepPoint {
  double sigma = 0.0;
  double alpha = 0.0;              // mean observed alpha
  double alpha_apriori = 0.0;      // means over trials
  double alpha_explicit = 0.0;
  double alpha_aposteriori = 0.0;
  double direction_residual = 0.0; // mean ||alpha X_obs - alpha X_pred||
  double sigma_max = 0.0;
  bool above_sigma_max = false;
  int failures = 0;
};

struct SweepReport {
  std::vector<double> sigmas;
  std::vector<SweepPoint> points;
  double alpha_slope = 0.0;
  double residual_slope = 0.0;
  double apriori_slope = 0.0;
  double aposteriori_slope = 0.0;
};

/// Each trial draws its noise once (stream derive_seed(seed, trial)) and
/// scales it through the grid. Throws InvalidArgument unless the grid is
/// strictly decreasing and positive.
SweepReport sigma_sweep(const GroundTruthModel& gt, const std::vector<double>& sigmas, int trials,
                        std::uint64_t seed, const PipelineConfig& config = PipelineConfig());

struct TrialRecord {
  std::uint64_t seed = 0;
  bool ok = false;  // pipeline ran; false when a numerical error was caught
  std::string error;
  double alpha = 0.0;
  double alpha_apriori = 0.0;
  double alpha_explicit = 0.0;
  double alpha_aposteriori = 0.0;
  double eigenvalue_error = 0.0;  // max_n,i |lambda_hat - lambda|
  double eigenvalue_bound = 0.0;  // max_n of the bound at observed alpha, paired per n
  bool apriori_pass = false;
  bool explicit_pass = false;
  bool aposteriori_pass = false;
  bool eigenvalue_pass = false;
  bool apriori_le_explicit = false;
};

struct VerifyReport {
  double sigma = 0.0;
  int trials = 0;
  int failures = 0;
  double apriori_fraction = 0.0;
  double explicit_fraction = 0.0;
  double aposteriori_fraction = 0.0;
  double eigenvalue_fraction = 0.0;
  double apriori_le_explicit_fraction = 0.0;
  std::vector<TrialRecord> records;
};

/// Containment slack: observed <= 1.1 * bound + 1e-12.
bool contained(double observed, double bound);

/// Fresh noise per trial, full pipeline, containment of every bound.
/// Numerical errors inside a trial are recorded, never thrown.
VerifyReport verify_bounds(const GroundTruthModel& gt, double sigma, int trials, std::uint64_t seed,
                           const PipelineConfig& config = PipelineConfig());

struct TensorDecomposition {
  ObservableMatrices observables;
  PipelineResult pipeline;
  ComponentMatrix y;       // Z*_ni / [theta^T Z*]_i
  ComponentMatrix z_star;  // rescaled components
};

TensorDecomposition decompose_tensor(const Tensor3& t, Eigen::Index d, const Vector& theta,
                                     const PipelineConfig& config = PipelineConfig(),
                                     std::uint64_t seed = 0);

struct TensorTrialRecord {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double kappa = 0.0;
  double max_error = 0.0;  // entrywise, after column matching
  double bound_proof = 0.0;
  double bound_statement = 0.0;
  bool proof_pass = false;
  bool statement_pass = false;
};

struct TensorVerifyReport {
  double sigma = 0.0;
  double eps = 0.0;
  int trials = 0;
  int failures = 0;
  double proof_fraction = 0.0;
  double statement_fraction = 0.0;
  std::vector<TensorTrialRecord> records;
};

/// Per trial: Z from gen_components(n, kappa, .), tensor noise of norm eps,
/// decomposition with theta = ones, containment of the component bound.
TensorVerifyReport verify_component_bound(Eigen::Index n, double kappa, double sigma, double eps,
                                          int trials, std::uint64_t seed,
                                          const PipelineConfig& config = PipelineConfig());

}  // namespace jschur
