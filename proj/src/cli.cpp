#include "jschur/cli.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "CLI11.hpp"

#include "jschur/harness.hpp"
#include "jschur/io.hpp"
#include "jschur/random.hpp"

namespace jschur {

namespace {

struct RunConfig {
  std::string kind = "model";
  std::string input;
  std::string output;
  std::string frame;
  double sigma = 0.0;
  bool sigma_set = false;
  double tol = 1e-12;
  int max_iters = 500;
  int trials = 0;
  bool trials_set = false;
  std::uint64_t seed = 0;
  std::string beta = "ones";
  std::string theta = "ones";
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  std::optional<double> kappa;
  double gamma = 1.0;
};

void emit(const RunConfig& cfg, const Json& j, std::ostream& out) {
  if (cfg.output.empty()) {
    out << dump_canonical(j);
  } else {
    write_json_file(cfg.output, j);
  }
}

BetaStrategy beta_strategy(const std::string& s) {
  return s == "random" ? BetaStrategy::Random : BetaStrategy::Ones;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig pc;
  pc.optimizer.grad_tol = cfg.tol;
  pc.optimizer.max_iters = cfg.max_iters;
  pc.beta = beta_strategy(cfg.beta);
  return pc;
}

GroundTruthModel model_from_flags(const RunConfig& cfg, Eigen::Index default_dim, double default_kappa) {
  GeneratorSpec spec;
  spec.d = cfg.d > 0 ? cfg.d : default_dim;
  spec.n = cfg.n > 0 ? cfg.n : spec.d;
  spec.kappa_target = cfg.kappa.value_or(default_kappa);
  spec.gamma_target = cfg.gamma;
  spec.seed = cfg.seed;
  spec.sigma = cfg.sigma;
  return gen_ground_truth(spec);
}

Json cmd_generate(const RunConfig& cfg) {
  if (cfg.kind == "model") {
    GeneratorSpec spec;
    spec.d = cfg.d > 0 ? cfg.d : 3;
    spec.n = cfg.n > 0 ? cfg.n : spec.d;
    spec.kappa_target = cfg.kappa.value_or(1.0);
    spec.gamma_target = cfg.gamma;
    spec.seed = cfg.seed;
    spec.sigma = cfg.sigma;
    return ground_truth_to_json(gen_ground_truth(spec));
  }
  const Eigen::Index n = cfg.n > 0 ? cfg.n : (cfg.d > 0 ? cfg.d : 4);
  const Eigen::Index d = cfg.d > 0 ? cfg.d : n;
  const ComponentMatrix z = gen_components(n, d, cfg.kappa.value_or(1.0), derive_seed(cfg.seed, 0));
  const double eps = 1.0;
  TensorFile f{gen_tensor(z, cfg.sigma, eps, derive_seed(cfg.seed, 1)), z, cfg.sigma, eps};
  return tensor_to_json(f);
}

Json cmd_triangularize(const RunConfig& cfg) {
  const MatrixSet set = matrix_set_from_json(read_json_file(cfg.input));
  const PipelineConfig pc = pipeline_config(cfg);
  const PipelineResult res = run_pipeline(set, pc, cfg.seed);
  Json j = frame_to_json(res.u);
  j["N"] = set.size();
  j["beta"] = vector_to_json(res.beta.values());
  j["U_init"] = matrix_to_json(res.u_init.matrix());
  j["trace"] = trace_to_json(res.trace);
  j["loss"] = loss(res.u, set);
  j["grad_norm"] = gradient(res.u, set).norm();
  j["sigma"] = cfg.sigma;
  const double bound = a_posteriori_bound(set, res.u, res.beta, cfg.sigma);
  j["alpha_aposteriori"] = std::isfinite(bound) ? Json(bound) : Json(nullptr);
  return j;
}

Json cmd_bounds(const RunConfig& cfg) {
  const GroundTruthModel gt = ground_truth_from_json(read_json_file(cfg.input));
  const MatrixSet observed = gt.observed_set();
  std::optional<OrthogonalFrame> u;
  std::optional<CombinationVector> beta;
  if (!cfg.frame.empty()) {
    const Json fj = read_json_file(cfg.frame);
    u = frame_from_json(fj);
    if (fj.contains("beta")) beta = CombinationVector(vector_from_json(fj["beta"]));
  }
  if (!beta) beta = find_separating_beta(observed, beta_strategy(cfg.beta), cfg.seed, 100).beta;
  const OrthogonalFrame u_init = schur_initializer(observed, *beta);
  if (!u) {
    const PipelineResult res = run_pipeline(observed, pipeline_config(cfg), cfg.seed);
    u = res.u;
    beta = res.beta;
  }
  const TriangularizerFamily family = enumerate_exact_triangularizers(gt);
  const NearestFrame nearest = distance_to_nearest(*u, family);
  const BoundReport report = bound_report(gt, *u, family.frames[nearest.index], *beta, u_init);
  Json j = bound_report_to_json(report);
  j["d"] = gt.dim();
  j["N"] = gt.count();
  j["sigma"] = gt.sigma;
  j["nearest_index"] = nearest.index;
  j["beta"] = vector_to_json(beta->values());
  j["U"] = matrix_to_json(u->matrix());
  return j;
}

Json cmd_tensor(const RunConfig& cfg) {
  const TensorFile f = tensor_from_json(read_json_file(cfg.input));
  const Eigen::Index n = f.tensor.size();
  const Eigen::Index d = cfg.d > 0 ? cfg.d : (f.z ? f.z->cols() : n);
  Vector theta;
  if (cfg.theta == "random") {
    Rng rng(derive_seed(cfg.seed, 7));
    theta = CombinationVector::normalized(rng.gaussian_vector(n)).values();
  } else {
    theta = CombinationVector::ones(n).values();
  }
  const TensorDecomposition dec = decompose_tensor(f.tensor, d, theta, pipeline_config(cfg), cfg.seed);
  Json j{{"N", n},
         {"d", d},
         {"theta", vector_to_json(theta)},
         {"Y", matrix_to_json(dec.y)},
         {"Z_star", matrix_to_json(dec.z_star)},
         {"U", matrix_to_json(dec.pipeline.u.matrix())},
         {"loss", loss(dec.pipeline.u, dec.observables.set)},
         {"trace", trace_to_json(dec.pipeline.trace)}};
  if (f.z && f.z->cols() == d) {
    const Vector ones = Vector::Ones(n);
    const ColumnMatch m =
        match_columns(normalize_components(dec.z_star, ones), normalize_components(*f.z, ones));
    j["max_error"] = m.max_error;
    if (f.sigma && f.eps && n == d) {
      const ComponentBound b = component_error_bound(*f.z, *f.eps, *f.sigma);
      j["component_bound_proof"] = b.proof;
      j["component_bound_statement"] = b.statement;
      j["component_gamma"] = b.gamma;
      j["component_kappa"] = b.kappa;
      j["component_m"] = b.m_const;
      j["component_w"] = b.w_const;
    }
  }
  return j;
}

Json cmd_sweep(const RunConfig& cfg) {
  const GroundTruthModel gt = cfg.input.empty() ? model_from_flags(cfg, 3, 2.0)
                                                : ground_truth_from_json(read_json_file(cfg.input));
  const double top = cfg.sigma_set ? cfg.sigma : 1e-3;
  if (!(top > 0.0)) throw CLI::ValidationError("--sigma", "sweep needs a positive sigma");
  const std::vector<double> grid{top, top / 2, top / 4, top / 8};
  const int trials = cfg.trials_set ? cfg.trials : 5;
  return sweep_report_to_json(sigma_sweep(gt, grid, trials, cfg.seed, pipeline_config(cfg)));
}

Json cmd_verify(const RunConfig& cfg) {
  const double sigma = cfg.sigma_set ? cfg.sigma : 1e-3;
  const int trials = cfg.trials_set ? cfg.trials : 100;
  if (cfg.kind == "tensor") {
    const Eigen::Index n = cfg.n > 0 ? cfg.n : (cfg.d > 0 ? cfg.d : 4);
    const double kappa = cfg.kappa.value_or(3.0);
    return tensor_verify_report_to_json(
        verify_component_bound(n, kappa, sigma, 1.0, trials, cfg.seed, pipeline_config(cfg)));
  }
  const GroundTruthModel gt = cfg.input.empty() ? model_from_flags(cfg, 4, 3.0)
                                                : ground_truth_from_json(read_json_file(cfg.input));
  return verify_report_to_json(verify_bounds(gt, sigma, trials, cfg.seed, pipeline_config(cfg)));
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::InvalidArgument || code == ErrorCode::DimensionMismatch ? 1 : 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint triangularization of nearly commuting matrices", "jschur"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  const auto positive_index = CLI::Range(std::int64_t{1}, std::int64_t{1} << 20);
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", cfg.seed, "random seed"); };
  auto add_output = [&](CLI::App* s) { s->add_option("--output", cfg.output, "output file (stdout if omitted)"); };
  auto add_sigma = [&](CLI::App* s) {
    s->add_option_function<double>("--sigma", [&](const double& v) { cfg.sigma = v; cfg.sigma_set = true; },
                                   "noise level")
        ->check(CLI::NonNegativeNumber);
  };
  auto add_optimizer = [&](CLI::App* s) {
    s->add_option("--tol", cfg.tol, "gradient tolerance")->check(CLI::PositiveNumber);
    s->add_option("--max-iters", cfg.max_iters, "iteration cap")->check(CLI::NonNegativeNumber);
    s->add_option("--beta", cfg.beta, "pencil weights")->check(CLI::IsMember({"ones", "random"}));
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--d", cfg.d, "dimension")->check(positive_index);
    s->add_option("--N", cfg.n, "number of matrices")->check(positive_index);
    s->add_option("--kappa", cfg.kappa, "target condition number")->check(CLI::Range(1.0, 1e12));
    s->add_option("--gamma", cfg.gamma, "target eigengap")->check(CLI::PositiveNumber);
  };
  auto add_trials = [&](CLI::App* s) {
    s->add_option_function<int>("--trials", [&](const int& v) { cfg.trials = v; cfg.trials_set = true; },
                                "number of trials")
        ->check(CLI::NonNegativeNumber);
  };

  CLI::App* gen = app.add_subcommand("generate", "write a synthetic model or tensor");
  gen->add_option("--kind", cfg.kind, "model or tensor")->check(CLI::IsMember({"model", "tensor"}));
  add_model(gen);
  add_sigma(gen);
  add_seed(gen);
  add_output(gen);

  CLI::App* tri = app.add_subcommand("triangularize", "joint triangularizer of a matrix set");
  tri->add_option("--input", cfg.input, "matrix set file")->required();
  add_optimizer(tri);
  add_sigma(tri);
  add_seed(tri);
  add_output(tri);

  CLI::App* bnd = app.add_subcommand("bounds", "bound report for a ground-truth model");
  bnd->add_option("--input", cfg.input, "ground-truth file")->required();
  bnd->add_option("--frame", cfg.frame, "frame file written by triangularize");
  add_optimizer(bnd);
  add_seed(bnd);
  add_output(bnd);

  CLI::App* ten = app.add_subcommand("tensor", "decompose a symmetric tensor");
  ten->add_option("--input", cfg.input, "tensor file")->required();
  ten->add_option("--d", cfg.d, "number of components")->check(positive_index);
  ten->add_option("--theta", cfg.theta, "slice weights")->check(CLI::IsMember({"ones", "random"}));
  add_optimizer(ten);
  add_seed(ten);
  add_output(ten);

  CLI::App* swp = app.add_subcommand("sweep", "sigma sweep with log-log slopes");
  swp->add_option("--input", cfg.input, "ground-truth file (generated if omitted)");
  add_model(swp);
  add_sigma(swp);
  add_trials(swp);
  add_optimizer(swp);
  add_seed(swp);
  add_output(swp);

  CLI::App* ver = app.add_subcommand("verify", "bound containment study");
  ver->add_option("--kind", cfg.kind, "model or tensor")->check(CLI::IsMember({"model", "tensor"}));
  ver->add_option("--input", cfg.input, "ground-truth file (generated if omitted)");
  add_model(ver);
  add_sigma(ver);
  add_trials(ver);
  add_optimizer(ver);
  add_seed(ver);
  add_output(ver);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 1;
  }

  try {
    Json result;
    if (gen->parsed()) result = cmd_generate(cfg);
    else if (tri->parsed()) result = cmd_triangularize(cfg);
    else if (bnd->parsed()) result = cmd_bounds(cfg);
    else if (ten->parsed()) result = cmd_tensor(cfg);
    else if (swp->parsed()) result = cmd_sweep(cfg);
    else result = cmd_verify(cfg);
    emit(cfg, result, out);
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const IoError& e) {
    err << "IoError: " << e.what() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

}  // namespace jschur
