#include <gtest/gtest.h>

#include <cmath>

#include "jschur/harness.hpp"
#include "jschur/random.hpp"
#include "jschur/triangularizer.hpp"

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

SkewDirection random_unit_skew(Rng& rng, Eigen::Index d) {
  const Matrix g = rng.gaussian_matrix(d, d);
  const Matrix x = g - g.transpose();
  return SkewDirection(Matrix(x / x.norm()));
}

double loss_along(const OrthogonalFrame& u, const MatrixSet& set, const SkewDirection& x, double t) {
  return loss(OrthogonalFrame(u.matrix() * skew_exp(x, t).matrix()), set);
}

Matrix diag3(double a, double b, double c) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << a, b, c;
  return m;
}

}  // namespace

TEST(Loss, ZeroAtExactTriangularizer) {
  const GroundTruthModel gt = model(4, 3, 2.0, 1);
  const TriangularizerFamily fam = enumerate_exact_triangularizers(gt);
  EXPECT_LE(loss(fam.frames[5], gt.clean_set()), 1e-20);
}

TEST(Loss, OneByOneIsZero) {
  const MatrixSet set(1, {Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, -2.0)});
  EXPECT_EQ(loss(OrthogonalFrame::identity(1), set), 0.0);
}

TEST(Loss, ElementwiseOracle) {
  Rng rng(3);
  std::vector<Matrix> ms{rng.gaussian_matrix(3, 3), rng.gaussian_matrix(3, 3)};
  const MatrixSet set(3, ms);
  const OrthogonalFrame u(rng.orthogonal(3));
  double expected = 0.0;
  for (const Matrix& m : ms) {
    const Matrix t = u.matrix().transpose() * m * u.matrix();
    for (int j = 0; j < 3; ++j)
      for (int i = j + 1; i < 3; ++i) expected += t(i, j) * t(i, j);
  }
  EXPECT_NEAR(loss(u, set), expected, 1e-13 * expected);
}

TEST(Loss, SignDiagonalInvariance) {
  const GroundTruthModel gt = model(4, 3, 2.0, 2, 1e-2);
  const MatrixSet set = gt.observed_set();
  Rng rng(4);
  const Matrix u = rng.orthogonal(4);
  const double base = loss(OrthogonalFrame(u), set);
  for (int mask = 0; mask < 16; ++mask) {
    Vector s(4);
    for (int k = 0; k < 4; ++k) s(k) = (mask >> k) & 1 ? -1.0 : 1.0;
    EXPECT_NEAR(loss(OrthogonalFrame(Matrix(u * s.asDiagonal())), set), base, 1e-12 * base);
  }
}

TEST(Gradient, ZeroAtExactTriangularizer) {
  const GroundTruthModel gt = model(4, 4, 3.0, 5);
  const TriangularizerFamily fam = enumerate_exact_triangularizers(gt);
  for (std::size_t k = 0; k < fam.size(); k += 37) {
    EXPECT_LE(gradient(fam.frames[k], gt.clean_set()).norm(), 1e-12);
  }
}

TEST(Gradient, ExactlySkew) {
  Rng rng(6);
  const MatrixSet set(4, {rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4)});
  const Matrix g = gradient(OrthogonalFrame(rng.orthogonal(4)), set).matrix();
  EXPECT_EQ((g + g.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, CentralDifferences) {
  Rng rng(7);
  const MatrixSet set(4, {rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4)});
  const OrthogonalFrame u(rng.orthogonal(4));
  const Matrix g = gradient(u, set).matrix();
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const SkewDirection x = random_unit_skew(rng, 4);
    const double fd = (loss_along(u, set, x, h) - loss_along(u, set, x, -h)) / (2 * h);
    const double exact = (g.array() * x.matrix().array()).sum();
    EXPECT_LE(std::abs(fd - exact), 1e-6 * std::max(std::abs(exact), 1e-3)) << "trial " << trial;
  }
}

TEST(HessianForm, ZeroDirection) {
  Rng rng(8);
  const MatrixSet set(3, {rng.gaussian_matrix(3, 3)});
  EXPECT_EQ(hessian_form(OrthogonalFrame(rng.orthogonal(3)), set, SkewDirection::zero(3)), 0.0);
}

TEST(HessianForm, QuadraticScaling) {
  Rng rng(9);
  const MatrixSet set(4, {rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4)});
  const OrthogonalFrame u(rng.orthogonal(4));
  const SkewDirection x = random_unit_skew(rng, 4);
  const SkewDirection x2(Matrix(2.0 * x.matrix()));
  EXPECT_NEAR(hessian_form(u, set, x2), 4.0 * hessian_form(u, set, x), 1e-12 * std::abs(hessian_form(u, set, x2)));
}

TEST(HessianForm, LeadingTermAtExactTriangularizer) {
  const GroundTruthModel gt = model(4, 3, 2.0, 10);
  const MatrixSet set = gt.clean_set();
  const OrthogonalFrame u = enumerate_exact_triangularizers(gt).frames[0];
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const SkewDirection x = random_unit_skew(rng, 4);
    double expected = 0.0;
    for (const Matrix& m : set.matrices()) {
      const Matrix t = u.matrix().transpose() * m * u.matrix();
      expected += 2.0 * low_part(commutator(t, low_part(x.matrix()))).squaredNorm();
    }
    const double h = hessian_form(u, set, x);
    EXPECT_GE(h, 0.0);
    EXPECT_NEAR(h, expected, 1e-10 * expected);
  }
}

TEST(HessianForm, SecondDifferences) {
  Rng rng(12);
  const MatrixSet set(4, {rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4), rng.gaussian_matrix(4, 4)});
  const OrthogonalFrame u(rng.orthogonal(4));
  const double h = 1e-4;
  const double f0 = loss(u, set);
  for (int trial = 0; trial < 20; ++trial) {
    const SkewDirection x = random_unit_skew(rng, 4);
    const double fd = (loss_along(u, set, x, h) - 2 * f0 + loss_along(u, set, x, -h)) / (h * h);
    const double exact = hessian_form(u, set, x);
    EXPECT_LE(std::abs(fd - exact), 1e-5 * std::max(std::abs(exact), 1e-2)) << "trial " << trial;
  }
}

TEST(SeparatingBeta, SingleMatrix) {
  Matrix m(2, 2);
  m << 1, 4, 0, 3;
  const SeparatingBeta s = find_separating_beta(MatrixSet(2, {m}), BetaStrategy::Ones, 0, 10);
  EXPECT_EQ(s.beta.size(), 1);
  EXPECT_EQ(s.beta.values()(0), 1.0);
  EXPECT_GT(s.gap, 0.0);
}

TEST(SeparatingBeta, RandomSeparatesDiagonalPair) {
  const MatrixSet set(3, {diag3(1, 1, 2), diag3(0, 1, 0)});
  const SeparatingBeta s = find_separating_beta(set, BetaStrategy::Random, 3, 100);
  const Vector eig = (s.beta.values()(0) * Eigen::Vector3d(1, 1, 2) + s.beta.values()(1) * Eigen::Vector3d(0, 1, 0));
  std::vector<double> v(eig.data(), eig.data() + 3);
  std::sort(v.begin(), v.end());
  EXPECT_GT(s.gap, 0.0);
  EXPECT_NEAR(s.gap, std::min(v[1] - v[0], v[2] - v[1]), 1e-12);
}

TEST(SeparatingBeta, IdenticalColumnsFail) {
  const MatrixSet set(3, {diag3(1, 1, 2), diag3(0, 0, 3)});
  try {
    find_separating_beta(set, BetaStrategy::Ones, 0, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSeparatingBeta);
  }
}

TEST(CombinationVector, RejectsNonUnit) {
  EXPECT_THROW(CombinationVector(Vector::Constant(1, 2.0)), Error);
}

TEST(SchurInitializer, NoiselessIsExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MatrixSet set = model(4, 4, 3.0, 20 + seed).clean_set();
    const SeparatingBeta s = find_separating_beta(set, BetaStrategy::Ones, seed, 100);
    EXPECT_LE(loss(schur_initializer(set, s.beta), set), 1e-18);
  }
}

TEST(SchurInitializer, UpperTriangularAscendingGivesIdentity) {
  Matrix a(3, 3), b(3, 3);
  a << 1, 2, 3, 0, 2, 1, 0, 0, 4;
  b << 0, 1, 0, 0, 1, 2, 0, 0, 3;
  const MatrixSet set(3, {a, b});
  const OrthogonalFrame u = schur_initializer(set, CombinationVector::ones(2));
  EXPECT_LE((u.matrix() - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(SchurInitializer, ComplexPencilSurfaces) {
  Matrix r(2, 2);
  r << 0, -1, 1, 0;
  const MatrixSet set(2, {r});
  EXPECT_THROW(schur_initializer(set, CombinationVector::ones(1)), Error);
}

TEST(Descend, NoiselessConverges) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GroundTruthModel gt = model(4, 4, 3.0, 40 + seed);
    const MatrixSet set = gt.clean_set();
    Rng rng(seed);
    const OrthogonalFrame u_init = enumerate_exact_triangularizers(gt).frames[0];
    const OrthogonalFrame start(u_init.matrix() * skew_exp(random_unit_skew(rng, 4), 0.05).matrix());
    const DescentResult r = descend(set, start, OptimizerConfig{});
    EXPECT_EQ(r.trace.termination, Termination::GradientTolerance);
    EXPECT_LE(r.trace.steps.back().grad_norm, 1e-12);
    EXPECT_LE(loss(r.u, set), 1e-20);
    EXPECT_LE(r.trace.iterations(), 200u);
  }
}

TEST(Descend, MonotoneLoss) {
  const MatrixSet set = model(4, 4, 2.0, 50, 1e-2).observed_set();
  Rng rng(51);
  OptimizerConfig cfg;
  cfg.max_iters = 100;
  cfg.stop_on_stall = true;
  const DescentResult r = descend(set, OrthogonalFrame(rng.orthogonal(4)), cfg);
  for (std::size_t k = 1; k < r.trace.steps.size(); ++k) {
    EXPECT_LE(r.trace.steps[k].loss, r.trace.steps[k - 1].loss);
  }
}

TEST(Descend, ZeroIterations) {
  const MatrixSet set = model(3, 3, 2.0, 52, 1e-2).observed_set();
  Rng rng(53);
  const OrthogonalFrame u(rng.orthogonal(3));
  OptimizerConfig cfg;
  cfg.max_iters = 0;
  const DescentResult r = descend(set, u, cfg);
  EXPECT_EQ(r.u.matrix(), u.matrix());
  EXPECT_EQ(termination_name(r.trace.termination), "max_iters");
  EXPECT_EQ(r.trace.steps.size(), 1u);
}

TEST(Descend, InvalidConfig) {
  const MatrixSet set = model(3, 3, 2.0, 54).clean_set();
  OptimizerConfig cfg;
  cfg.armijo_c = 1.5;
  EXPECT_THROW(descend(set, OrthogonalFrame::identity(3), cfg), Error);
}

TEST(Descend, StallEitherThrowsOrStops) {
  const MatrixSet set = model(4, 4, 3.0, 55, 1e-3).observed_set();
  const SeparatingBeta s = find_separating_beta(set, BetaStrategy::Ones, 0, 100);
  OptimizerConfig cfg;
  cfg.grad_tol = 1e-30;
  cfg.max_iters = 100000;
  try {
    descend(set, schur_initializer(set, s.beta), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LineSearchStalled);
  }
  cfg.stop_on_stall = true;
  const DescentResult r = descend(set, schur_initializer(set, s.beta), cfg);
  EXPECT_EQ(termination_name(r.trace.termination), "stalled");
}

TEST(GaussNewton, ReachesStationaryPoint) {
  const MatrixSet set = model(4, 4, 3.0, 56, 1e-3).observed_set();
  const SeparatingBeta s = find_separating_beta(set, BetaStrategy::Ones, 0, 100);
  const OrthogonalFrame u0 = schur_initializer(set, s.beta);
  const OrthogonalFrame u = gauss_newton_refine(set, u0);
  EXPECT_LE(loss(u, set), loss(u0, set));
  EXPECT_LE(gradient(u, set).norm(), 1e-13);
}

TEST(GaussNewton, JacobianMatchesLinearization) {
  Rng rng(57);
  const Matrix t = rng.gaussian_matrix(4, 4);
  const LowProjector p = build_low_projector(4);
  const Vector x = rng.gaussian_vector(6);
  const Matrix e = p.embed(x);
  EXPECT_LE((loss_jacobian(t) * x - p.select(commutator(t, Matrix(e - e.transpose())))).norm(), 1e-13);
}

TEST(ZeroLoss, OnlyFamilyMembers) {
  const GroundTruthModel gt = model(3, 3, 2.0, 58);
  const MatrixSet set = gt.clean_set();
  const TriangularizerFamily fam = enumerate_exact_triangularizers(gt);
  Rng rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const OrthogonalFrame u(rng.orthogonal(3));
    EXPECT_GT(loss(u, set), 1e-12);
  }
  for (const OrthogonalFrame& f : fam.frames) {
    EXPECT_LE(loss(f, set), 1e-18);
    EXPECT_LE(distance_to_nearest(f, fam).alpha, 1e-8);
  }
}
