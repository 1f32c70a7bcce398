#include "jschur/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "jschur/random.hpp"

namespace jschur {

std::string noise_style_name(NoiseStyle s) { return s == NoiseStyle::Dense ? "dense" : "sparse"; }

NoiseStyle parse_noise_style(const std::string& s) {
  if (s == "dense") return NoiseStyle::Dense;
  if (s == "sparse") return NoiseStyle::Sparse;
  fail(ErrorCode::InvalidArgument, "unknown noise style '" + s + "'");
}

void GeneratorSpec::validate() const {
  if (d < 1 || n < 1) fail(ErrorCode::InvalidArgument, "generator: d and N must be positive");
  if (!(kappa_target >= 1.0) || !std::isfinite(kappa_target)) {
    fail(ErrorCode::InvalidArgument, "generator: kappa must be >= 1");
  }
  if (!(gamma_target > 0.0) || !std::isfinite(gamma_target)) {
    fail(ErrorCode::InvalidArgument, "generator: gamma must be > 0");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::InvalidArgument, "generator: sigma must be >= 0");
}

namespace {

// Streams of one generator seed.
constexpr std::uint64_t kStreamV = 0;
constexpr std::uint64_t kStreamLambda = 1;
constexpr std::uint64_t kStreamNoise = 2;

Vector log_spaced(Eigen::Index d, double top) {
  Vector s(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    s(i) = d == 1 ? 1.0 : std::pow(top, static_cast<double>(i) / static_cast<double>(d - 1));
  }
  return s;
}

}  // namespace

std::vector<Matrix> gen_noise(Eigen::Index d, Eigen::Index n, NoiseStyle style, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Matrix w;
    do {
      if (style == NoiseStyle::Dense) {
        w = rng.gaussian_matrix(d, d);
      } else {
        w = Matrix::Zero(d, d);
        for (Eigen::Index e = 0; e < d; ++e) {
          const auto pos = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(d * d));
          w(pos % d, pos / d) = rng.gaussian();
        }
      }
    } while (w.norm() == 0.0);
    out.push_back(w / w.norm());
  }
  return out;
}

GroundTruthModel gen_ground_truth(const GeneratorSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.d;
  GroundTruthModel gt;

  Rng rng_v(derive_seed(spec.seed, kStreamV));
  const Matrix q1 = rng_v.orthogonal(d);
  const Matrix q2 = rng_v.orthogonal(d);
  gt.v = q1 * log_spaced(d, spec.kappa_target).asDiagonal() * q2;

  Rng rng_l(derive_seed(spec.seed, kStreamLambda));
  gt.lambda = rng_l.gaussian_matrix(spec.n, d);
  if (d > 1) {
    double gamma = joint_eigengap(gt.lambda);
    while (!(gamma > 0.0)) {
      gt.lambda = rng_l.gaussian_matrix(spec.n, d);
      gamma = joint_eigengap(gt.lambda);
    }
    gt.lambda *= std::sqrt(spec.gamma_target / gamma);
  }

  gt.noise = gen_noise(d, spec.n, spec.noise_style, derive_seed(spec.seed, kStreamNoise));
  gt.sigma = spec.sigma;
  return gt;
}

GroundTruthModel with_noise(const GroundTruthModel& gt, double sigma, NoiseStyle style,
                            std::uint64_t seed) {
  GroundTruthModel out = gt;
  out.noise = gen_noise(gt.dim(), static_cast<Eigen::Index>(gt.count()), style, seed);
  out.sigma = sigma;
  return out;
}

ComponentMatrix gen_components(Eigen::Index n, Eigen::Index d, double kappa_target, std::uint64_t seed) {
  if (d < 1 || d > n) fail(ErrorCode::InvalidArgument, "gen_components: need 1 <= d <= N");
  if (!(kappa_target >= 1.0)) fail(ErrorCode::InvalidArgument, "gen_components: kappa must be >= 1");
  Rng rng(seed);
  const Vector s = log_spaced(d, kappa_target) / kappa_target;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Matrix left = rng.orthogonal(n).leftCols(d);
    const Matrix z = left * s.asDiagonal() * rng.orthogonal(d);
    bool ok = true;
    for (Eigen::Index i = 0; i < d && ok; ++i) ok = std::abs(z.col(i).sum()) >= 0.5 * z.col(i).norm();
    if (ok) return z;
  }
  fail(ErrorCode::InvalidArgument, "gen_components: no admissible draw");
}

Tensor3 gen_noise_tensor(Eigen::Index n, double eps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(static_cast<std::size_t>(n * n * n));
  for (double& x : data) x = rng.gaussian();
  Tensor3 e(n, std::move(data));
  return eps == 0.0 ? e.scaled(0.0) : e.scaled(eps / e.norm());
}

Tensor3 gen_tensor(const ComponentMatrix& z, double sigma, double eps, std::uint64_t seed) {
  return Tensor3::from_components(z) + gen_noise_tensor(z.rows(), eps, seed).scaled(sigma);
}

// ---------------------------------------------------------------------------

TriangularizerFamily enumerate_exact_triangularizers(const GroundTruthModel& gt) {
  const Eigen::Index d = gt.dim();
  if (d > 5) fail(ErrorCode::TooLarge, "enumeration limited to d <= 5");
  if (d > 1 && !(joint_eigengap(gt.lambda) > 0.0)) {
    fail(ErrorCode::DegenerateSpectrum, "joint eigenvalues are not separated");
  }
  TriangularizerFamily family;
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    Matrix vp(d, d);
    for (Eigen::Index k = 0; k < d; ++k) vp.col(k) = gt.v.col(perm[static_cast<std::size_t>(k)]);
    const Eigen::HouseholderQR<Matrix> qr(vp);
    Matrix q = qr.householderQ();
    for (Eigen::Index k = 0; k < d; ++k) {
      if (qr.matrixQR()(k, k) < 0.0) q.col(k) *= -1.0;
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      Vector sign(d);
      for (Eigen::Index k = 0; k < d; ++k) sign(k) = ((mask >> k) & 1U) ? -1.0 : 1.0;
      family.frames.emplace_back(Matrix(q * sign.asDiagonal()));
      family.perms.push_back(perm);
      family.signs.push_back(sign);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return family;
}

NearestFrame distance_to_nearest(const OrthogonalFrame& u, const TriangularizerFamily& family) {
  if (family.size() == 0) fail(ErrorCode::NoComparableFrame, "empty family");
  NearestFrame best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t k = 0; k < family.size(); ++k) {
    const Matrix rel = family.frames[k].matrix().transpose() * u.matrix();
    if (rel.determinant() <= 0.0) continue;
    try {
      const double a = orthogonal_log(OrthogonalFrame(rel)).norm();
      if (a < best.alpha) best = {a, k};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LogBranchAmbiguous) throw;
    }
  }
  if (!std::isfinite(best.alpha)) fail(ErrorCode::NoComparableFrame, "no frame in the rotation component of U");
  return best;
}

// ---------------------------------------------------------------------------

PipelineConfig::PipelineConfig() {
  optimizer.max_iters = 2000;
  optimizer.grad_tol = 1e-13;
  optimizer.stop_on_stall = true;
}

PipelineResult run_pipeline(const MatrixSet& set, const PipelineConfig& config, std::uint64_t seed) {
  const SeparatingBeta sep = find_separating_beta(set, config.beta, seed, config.beta_tries);
  const OrthogonalFrame u_init = schur_initializer(set, sep.beta);
  DescentResult run = descend(set, u_init, config.optimizer);
  OrthogonalFrame u = config.refine_iters > 0 ? gauss_newton_refine(set, run.u, config.refine_iters) : run.u;
  return PipelineResult{sep.beta, u_init, std::move(u), std::move(run.trace)};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorCode::DimensionMismatch, "loglog_slope: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

namespace {

struct TrialOutcome {
  PipelineResult run;
  NearestFrame nearest;
  OrthogonalFrame u_circ;
};

TrialOutcome run_trial(const GroundTruthModel& gt, const TriangularizerFamily& family,
                       const PipelineConfig& config, std::uint64_t seed) {
  PipelineResult run = run_pipeline(gt.observed_set(), config, seed);
  const NearestFrame nearest = distance_to_nearest(run.u, family);
  OrthogonalFrame u_circ = family.frames[nearest.index];
  return TrialOutcome{std::move(run), nearest, std::move(u_circ)};
}

double finite_or_zero(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

SweepReport sigma_sweep(const GroundTruthModel& gt, const std::vector<double>& sigmas, int trials,
                        std::uint64_t seed, const PipelineConfig& config) {
  SweepReport report;
  report.sigmas = sigmas;
  if (sigmas.empty()) return report;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    if (!(sigmas[k] > 0.0) || (k > 0 && !(sigmas[k] < sigmas[k - 1]))) {
      fail(ErrorCode::InvalidArgument, "sigma grid must be positive and strictly decreasing");
    }
  }
  if (trials < 0) fail(ErrorCode::InvalidArgument, "trials must be >= 0");
  const TriangularizerFamily family = enumerate_exact_triangularizers(gt);

  for (double sigma : sigmas) {
    SweepPoint point;
    point.sigma = sigma;
    std::vector<double> alpha, apriori, expl, apost, resid;
    for (int trial = 0; trial < trials; ++trial) {
      const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
      const GroundTruthModel noisy = with_noise(gt, sigma, NoiseStyle::Dense, trial_seed);
      try {
        const TrialOutcome out = run_trial(noisy, family, config, trial_seed);
        const Matrix observed = orthogonal_log(OrthogonalFrame(Matrix(out.u_circ.matrix().transpose() * out.run.u.matrix()))).matrix();
        const Matrix predicted = predicted_direction(noisy, out.u_circ).matrix();
        const InitThreshold it = init_noise_threshold(noisy, out.run.beta, out.run.u_init);
        point.sigma_max = it.sigma_max;
        point.above_sigma_max = point.above_sigma_max || sigma > it.sigma_max;
        alpha.push_back(out.nearest.alpha);
        apriori.push_back(a_priori_bound(noisy, out.u_circ));
        expl.push_back(explicit_bound(noisy).alpha);
        apost.push_back(a_posteriori_bound(noisy.observed_set(), out.run.u, out.run.beta, sigma));
        resid.push_back((observed - predicted).norm());
      } catch (const Error&) {
        ++point.failures;
      }
    }
    point.alpha = finite_or_zero(alpha);
    point.alpha_apriori = finite_or_zero(apriori);
    point.alpha_explicit = finite_or_zero(expl);
    point.alpha_aposteriori = finite_or_zero(apost);
    point.direction_residual = finite_or_zero(resid);
    report.points.push_back(point);
  }

  std::vector<double> xs, a, r, pri, post;
  for (const SweepPoint& p : report.points) {
    if (!(p.alpha > 0.0 && p.direction_residual > 0.0 && p.alpha_apriori > 0.0 && p.alpha_aposteriori > 0.0)) {
      continue;
    }
    xs.push_back(p.sigma);
    a.push_back(p.alpha);
    r.push_back(p.direction_residual);
    pri.push_back(p.alpha_apriori);
    post.push_back(p.alpha_aposteriori);
  }
  report.alpha_slope = loglog_slope(xs, a);
  report.residual_slope = loglog_slope(xs, r);
  report.apriori_slope = loglog_slope(xs, pri);
  report.aposteriori_slope = loglog_slope(xs, post);
  return report;
}

bool contained(double observed, double bound) { return observed <= 1.1 * bound + 1e-12; }

VerifyReport verify_bounds(const GroundTruthModel& gt, double sigma, int trials, std::uint64_t seed,
                           const PipelineConfig& config) {
  VerifyReport report;
  report.sigma = sigma;
  report.trials = std::max(trials, 0);
  if (trials <= 0) return report;
  const TriangularizerFamily family = enumerate_exact_triangularizers(gt);
  const std::vector<Matrix> clean = gt.clean_matrices();

  int n_apriori = 0, n_explicit = 0, n_apost = 0, n_eig = 0, n_order = 0;
  for (int trial = 0; trial < trials; ++trial) {
    TrialRecord rec;
    rec.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    try {
      const GroundTruthModel noisy = with_noise(gt, sigma, NoiseStyle::Dense, rec.seed);
      const TrialOutcome out = run_trial(noisy, family, config, rec.seed);
      rec.alpha = out.nearest.alpha;
      rec.alpha_apriori = a_priori_bound(noisy, out.u_circ);
      rec.alpha_explicit = explicit_bound(noisy).alpha;
      const MatrixSet observed = noisy.observed_set();
      rec.alpha_aposteriori = a_posteriori_bound(observed, out.run.u, out.run.beta, sigma);

      const Matrix& u = out.run.u.matrix();
      const Matrix& uc = out.u_circ.matrix();
      rec.eigenvalue_pass = true;
      for (std::size_t k = 0; k < clean.size(); ++k) {
        const Vector est = (u.transpose() * observed[k] * u).diagonal();
        const Vector truth = (uc.transpose() * clean[k] * uc).diagonal();
        const double err = (est - truth).cwiseAbs().maxCoeff();
        const double bound = eigenvalue_error_bound(rec.alpha, sigma, clean[k].norm(), noisy.noise[k].norm());
        rec.eigenvalue_error = std::max(rec.eigenvalue_error, err);
        rec.eigenvalue_bound = std::max(rec.eigenvalue_bound, bound);
        rec.eigenvalue_pass = rec.eigenvalue_pass && contained(err, bound);
      }
      rec.apriori_pass = contained(rec.alpha, rec.alpha_apriori);
      rec.explicit_pass = contained(rec.alpha, rec.alpha_explicit);
      rec.aposteriori_pass = contained(rec.alpha, rec.alpha_aposteriori);
      rec.apriori_le_explicit = rec.alpha_apriori <= rec.alpha_explicit;
      rec.ok = true;
    } catch (const Error& e) {
      rec.error = e.what();
      ++report.failures;
    }
    n_apriori += rec.apriori_pass;
    n_explicit += rec.explicit_pass;
    n_apost += rec.aposteriori_pass;
    n_eig += rec.eigenvalue_pass;
    n_order += rec.apriori_le_explicit;
    report.records.push_back(std::move(rec));
  }
  const double t = static_cast<double>(trials);
  report.apriori_fraction = n_apriori / t;
  report.explicit_fraction = n_explicit / t;
  report.aposteriori_fraction = n_apost / t;
  report.eigenvalue_fraction = n_eig / t;
  report.apriori_le_explicit_fraction = n_order / t;
  return report;
}

// ---------------------------------------------------------------------------

TensorDecomposition decompose_tensor(const Tensor3& t, Eigen::Index d, const Vector& theta,
                                     const PipelineConfig& config, std::uint64_t seed) {
  ObservableMatrices obs = observable_matrices(t, d, theta);
  PipelineResult run = run_pipeline(obs.set, config, seed);
  ComponentMatrix y = estimate_components(run.u, obs.set);
  ComponentMatrix z_star = recover_scales(obs.m_theta, y, theta);
  return TensorDecomposition{std::move(obs), std::move(run), std::move(y), std::move(z_star)};
}

TensorVerifyReport verify_component_bound(Eigen::Index n, double kappa, double sigma, double eps,
                                          int trials, std::uint64_t seed, const PipelineConfig& config) {
  TensorVerifyReport report;
  report.sigma = sigma;
  report.eps = eps;
  report.trials = std::max(trials, 0);
  if (trials <= 0) return report;
  int n_proof = 0, n_statement = 0;
  const Vector ones = Vector::Ones(n);
  for (int trial = 0; trial < trials; ++trial) {
    TensorTrialRecord rec;
    rec.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    try {
      const ComponentMatrix z = gen_components(n, n, kappa, derive_seed(rec.seed, 0));
      const Tensor3 t = gen_tensor(z, sigma, eps, derive_seed(rec.seed, 1));
      const TensorDecomposition dec = decompose_tensor(t, n, ones, config, rec.seed);
      const ComponentMatrix truth = normalize_components(z, ones);
      rec.kappa = condition_number(z);
      rec.max_error = match_columns(dec.y, truth).max_error;
      const ComponentBound b = component_error_bound(z, eps, sigma);
      rec.bound_proof = b.proof;
      rec.bound_statement = b.statement;
      rec.proof_pass = contained(rec.max_error, b.proof);
      rec.statement_pass = contained(rec.max_error, b.statement);
      rec.ok = true;
    } catch (const Error& e) {
      rec.error = e.what();
      ++report.failures;
    }
    n_proof += rec.proof_pass;
    n_statement += rec.statement_pass;
    report.records.push_back(std::move(rec));
  }
  report.proof_fraction = n_proof / static_cast<double>(trials);
  report.statement_fraction = n_statement / static_cast<double>(trials);
  return report;
}

}  // namespace jschur
