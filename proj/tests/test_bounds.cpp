#include <gtest/gtest.h>

#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>

#include "jschur/bounds.hpp"
#include "jschur/harness.hpp"
#include "jschur/random.hpp"

using namespace jschur;

namespace {

GroundTruthModel model(Eigen::Index d, Eigen::Index n, double kappa, std::uint64_t seed, double sigma = 0.0) {
  GeneratorSpec spec;
  spec.d = d;
  spec.n = n;
  spec.kappa_target = kappa;
  spec.seed = seed;
  spec.sigma = sigma;
  return gen_ground_truth(spec);
}

GroundTruthModel diagonal_model(const Matrix& lambda, double sigma, std::uint64_t seed) {
  GroundTruthModel gt;
  gt.v = Matrix::Identity(lambda.cols(), lambda.cols());
  gt.lambda = lambda;
  gt.noise = gen_noise(lambda.cols(), lambda.rows(), NoiseStyle::Dense, seed);
  gt.sigma = sigma;
  return gt;
}

double sum_sq(const std::vector<Matrix>& ms) {
  double s = 0.0;
  for (const Matrix& m : ms) s += m.squaredNorm();
  return s;
}

}  // namespace

TEST(LowerCommutator, KroneckerOracle) {
  Rng rng(1);
  for (int d = 2; d <= 5; ++d) {
    const Matrix a = rng.gaussian_matrix(d, d);
    const Matrix id = Matrix::Identity(d, d);
    const Matrix p = build_low_projector(d).p_low;
    const Matrix kron = Eigen::kroneckerProduct(id, a).eval() - Eigen::kroneckerProduct(a.transpose(), id).eval();
    EXPECT_LE((lower_commutator_operator(a) - p * kron * p.transpose()).norm(), 1e-13);
  }
}

TEST(LowerCommutator, ActsAsLinearizedResidual) {
  Rng rng(2);
  const Matrix t = rng.gaussian_matrix(4, 4);
  const LowProjector p = build_low_projector(4);
  const Matrix l = low_part(rng.gaussian_matrix(4, 4));
  EXPECT_LE((lower_commutator_operator(t) * p.select(l) - p.select(commutator(t, l))).norm(), 1e-13);
}

TEST(AssembleTTilde, DiagonalModel) {
  Matrix lambda(3, 4);
  lambda << 1, 2, 4, 7, 0, 1, -1, 2, 3, 0, 1, 1;
  const GroundTruthModel gt = diagonal_model(lambda, 0.0, 1);
  const OperatorBundle ops = assemble_t_tilde(OrthogonalFrame::identity(4), gt.clean_set());
  Matrix expected = Matrix::Zero(6, 6);
  int k = 0;
  for (int j = 0; j < 4; ++j)
    for (int i = j + 1; i < 4; ++i, ++k) expected(k, k) = (lambda.col(i) - lambda.col(j)).squaredNorm();
  EXPECT_LE((ops.t_tilde_sum - expected).norm(), 1e-12);
  EXPECT_NEAR(ops.sigma_min, joint_eigengap(lambda), 1e-12);
}

TEST(AssembleTTilde, TwoByTwoSingleMatrix) {
  Matrix lambda(1, 2);
  lambda << 1.5, -0.25;
  const GroundTruthModel gt = diagonal_model(lambda, 0.0, 2);
  const OperatorBundle ops = assemble_t_tilde(OrthogonalFrame::identity(2), gt.clean_set());
  ASSERT_EQ(ops.t_tilde_sum.rows(), 1);
  EXPECT_NEAR(ops.t_tilde_sum(0, 0), 1.75 * 1.75, 1e-14);
}

TEST(AssembleTTilde, SymmetricPsd) {
  Rng rng(3);
  const MatrixSet set(4, {rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4)});
  const OperatorBundle ops = assemble_t_tilde(OrthogonalFrame(rng.orthogonal(4)), set, CombinationVector::ones(2));
  EXPECT_EQ((ops.t_tilde_sum - ops.t_tilde_sum.transpose()).norm(), 0.0);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(ops.t_tilde_sum);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  ASSERT_TRUE(ops.t_beta.has_value());
  EXPECT_EQ(ops.t_beta->rows(), 6);
}

TEST(APriori, ZeroNoise) {
  const GroundTruthModel gt = model(4, 4, 2.0, 4);
  EXPECT_EQ(a_priori_bound(gt, enumerate_exact_triangularizers(gt).frames[0]), 0.0);
}

TEST(APriori, DiagonalClosedForm) {
  Matrix lambda(2, 3);
  lambda << 0, 1, 3, 2, 0, 1;
  const GroundTruthModel gt = diagonal_model(lambda, 1e-3, 5);
  const double gamma = joint_eigengap(lambda);
  const double expected = 2.0 * std::sqrt(2.0) * 1e-3 / gamma * std::sqrt(sum_sq(gt.clean_matrices())) *
                          std::sqrt(sum_sq(gt.noise));
  EXPECT_NEAR(a_priori_bound(gt, OrthogonalFrame::identity(3)), expected, 1e-12 * expected);
}

TEST(APriori, LinearInSigma) {
  GroundTruthModel gt = model(4, 3, 2.0, 6, 1e-3);
  const OrthogonalFrame uc = enumerate_exact_triangularizers(gt).frames[3];
  const double a = a_priori_bound(gt, uc);
  const double e = explicit_bound(gt).alpha;
  gt.sigma = 2e-3;
  EXPECT_NEAR(a_priori_bound(gt, uc), 2.0 * a, 1e-14 * a);
  EXPECT_NEAR(explicit_bound(gt).alpha, 2.0 * e, 1e-14 * e);
}

TEST(APriori, RejectsInexactFrame) {
  const GroundTruthModel gt = model(3, 3, 2.0, 7, 1e-3);
  Rng rng(7);
  EXPECT_THROW(a_priori_bound(gt, OrthogonalFrame(rng.orthogonal(3))), Error);
}

TEST(Explicit, ZeroNoise) { EXPECT_EQ(explicit_bound(model(3, 3, 2.0, 8)).alpha, 0.0); }

TEST(Explicit, DominatesAPrioriOnOrthogonalDiagonal) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix lambda = rng.gaussian_matrix(3, 4);
    const GroundTruthModel gt = diagonal_model(lambda, 1e-3, 100 + trial);
    EXPECT_GE(explicit_bound(gt).alpha, a_priori_bound(gt, OrthogonalFrame::identity(4)));
  }
}

TEST(Explicit, DegenerateSpectrum) {
  Matrix lambda(2, 3);
  lambda << 1, 1, 2, 0, 0, 5;
  try {
    explicit_bound(diagonal_model(lambda, 1e-3, 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSpectrum);
  }
}

TEST(PredictedDirection, ZeroNoise) {
  const GroundTruthModel gt = model(3, 3, 2.0, 11);
  EXPECT_EQ(predicted_direction(gt, enumerate_exact_triangularizers(gt).frames[0]).norm(), 0.0);
}

TEST(PredictedDirection, StructureAndNorm) {
  const GroundTruthModel gt = model(4, 3, 2.0, 12, 1e-3);
  const OrthogonalFrame uc = enumerate_exact_triangularizers(gt).frames[0];
  const Matrix x = predicted_direction(gt, uc).matrix();
  EXPECT_EQ((x + x.transpose()).norm(), 0.0);
  const LowProjector p = build_low_projector(4);
  const Vector coords = p.select(x);
  const Matrix e = p.embed(coords);
  EXPECT_LE((e - low_part(x)).norm(), 0.0);
  EXPECT_NEAR(x.norm(), std::sqrt(2.0) * coords.norm(), 1e-15);
}

TEST(PredictedDirection, FirstOrderAccurate) {
  const GroundTruthModel base = model(3, 3, 2.0, 13);
  const TriangularizerFamily fam = enumerate_exact_triangularizers(base);
  for (double sigma : {1e-4, 1e-5}) {
    const GroundTruthModel gt = with_noise(base, sigma, NoiseStyle::Dense, 99);
    const PipelineResult r = run_pipeline(gt.observed_set(), PipelineConfig(), 0);
    const OrthogonalFrame uc = fam.frames[distance_to_nearest(r.u, fam).index];
    const Matrix observed = orthogonal_log(OrthogonalFrame(Matrix(uc.matrix().transpose() * r.u.matrix()))).matrix();
    const Matrix predicted = predicted_direction(gt, uc).matrix();
    EXPECT_LE((observed - predicted).norm(), 100.0 * sigma * observed.norm()) << sigma;
  }
}

TEST(APosteriori, NoiselessExact) {
  const GroundTruthModel gt = model(4, 4, 2.0, 14);
  const OrthogonalFrame uc = enumerate_exact_triangularizers(gt).frames[0];
  EXPECT_LE(a_posteriori_bound(gt.clean_set(), uc, CombinationVector::ones(4), 0.0), 1e-9);
}

TEST(APosteriori, NonUnitBeta) {
  const GroundTruthModel gt = model(3, 2, 2.0, 15);
  try {
    a_posteriori_bound(gt.clean_set(), OrthogonalFrame::identity(3), Vector::Constant(2, std::sqrt(2.0)), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonUnitBeta);
  }
}

TEST(InitThreshold, EpsilonIdentity) {
  const GroundTruthModel gt = model(4, 4, 3.0, 16, 1e-4);
  const MatrixSet set = gt.observed_set();
  const CombinationVector beta = find_separating_beta(set, BetaStrategy::Ones, 0, 100).beta;
  const InitThreshold c = init_noise_threshold(gt, beta, schur_initializer(set, beta));
  EXPECT_EQ(c.epsilon, c.gamma / (2.0 * std::pow(c.kappa, 4)));
  EXPECT_NEAR(c.gamma, 1.0, 1e-12);
}

TEST(InitThreshold, SingleDiagonalMatrix) {
  Matrix lambda(1, 2);
  lambda << 0, 1;
  const GroundTruthModel gt = diagonal_model(lambda, 0.0, 17);
  const CombinationVector beta = CombinationVector::ones(1);
  const InitThreshold c = init_noise_threshold(gt, beta, OrthogonalFrame::identity(2));
  EXPECT_EQ(c.gamma, 1.0);
  EXPECT_EQ(c.epsilon, 0.5);
  EXPECT_EQ(c.a_alpha, 32.0);
  EXPECT_EQ(c.a_sigma, 16.0);
  EXPECT_NEAR(c.t_beta_inv_norm, 1.0, 1e-15);
  EXPECT_NEAR(c.sigma_max, 1.0 / (std::sqrt(2.0) * c.t_beta_inv_norm * 32.0 + 16.0), 1e-15);
}

TEST(InitThreshold, BoundaryIdentity) {
  const GroundTruthModel gt = model(3, 3, 2.0, 18);
  const MatrixSet set = gt.observed_set();
  const CombinationVector beta = find_separating_beta(set, BetaStrategy::Ones, 0, 100).beta;
  const InitThreshold c = init_noise_threshold(gt, beta, schur_initializer(set, beta));
  const double at_max = alpha_max_at(c, c.sigma_max);
  const double init = std::sqrt(2.0 * 3.0) * c.sigma_max * c.t_beta_inv_norm;
  EXPECT_GE(at_max, init * (1.0 - 1e-12));
  EXPECT_NEAR(at_max, init, 1e-12 * init);
}

TEST(EigenvalueBound, Arithmetic) {
  EXPECT_EQ(eigenvalue_error_bound(0.0, 0.0, 3.0, 1.0), 0.0);
  EXPECT_NEAR(eigenvalue_error_bound(0.01, 1e-3, 2.0, 1.0), 0.041, 1e-15);
}

TEST(AssembleTTilde, SpectrumLowerBound) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const GroundTruthModel gt = model(2 + seed % 4, 1 + seed % 5, 1.0 + 0.5 * (seed % 5), 300 + seed);
    const OrthogonalFrame uc = enumerate_exact_triangularizers(gt).frames[seed % 8];
    const OperatorBundle ops = assemble_t_tilde(uc, gt.clean_set());
    const double lb = joint_eigengap(gt.lambda) / std::pow(condition_number(gt.v), 4);
    EXPECT_GE(ops.sigma_min, lb * (1.0 - 1e-10)) << seed;
  }
}

TEST(BoundReport, ConsistentFields) {
  const GroundTruthModel gt = model(4, 4, 2.0, 19, 1e-4);
  const MatrixSet set = gt.observed_set();
  const PipelineResult r = run_pipeline(set, PipelineConfig(), 0);
  const TriangularizerFamily fam = enumerate_exact_triangularizers(gt);
  const NearestFrame nf = distance_to_nearest(r.u, fam);
  const BoundReport rep = bound_report(gt, r.u, fam.frames[nf.index], r.beta, r.u_init);
  ASSERT_TRUE(rep.observed_alpha.has_value());
  EXPECT_NEAR(*rep.observed_alpha, nf.alpha, 1e-12);
  EXPECT_GE(rep.alpha_apriori, 0.0);
  EXPECT_GE(rep.alpha_explicit, rep.alpha_apriori);
  EXPECT_GE(rep.alpha_max, 0.0);
  EXPECT_GE(rep.sigma_max, 0.0);
  EXPECT_GT(rep.t_tilde_sigma_min, 0.0);
  EXPECT_EQ(rep.predicted_direction.dim(), 4);
}

TEST(GroundTruth, ValidateRejectsLargeNoise) {
  GroundTruthModel gt = model(3, 2, 2.0, 20);
  gt.noise[0] *= 2.0;
  EXPECT_THROW(gt.validate(), Error);
}
