#include "jschur/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace jschur {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw IoError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw IoError(std::string("missing field '") + key + "'");
  return *it;
}

double as_double(const Json& j, const char* what) {
  if (!j.is_number()) throw IoError(std::string("field '") + what + "' must be a number");
  return j.get<double>();
}

Eigen::Index as_index(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw IoError(std::string("field '") + what + "' must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < 1) throw IoError(std::string("field '") + what + "' must be positive");
  return static_cast<Eigen::Index>(v);
}

std::vector<double> as_doubles(const Json& j) {
  if (!j.is_array()) throw IoError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const Json& x : j) {
    if (!x.is_number()) throw IoError("expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

std::string dump_canonical(const Json& j) { return j.dump(1, ' ') + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << dump_canonical(j);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Json matrix_to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(number(m(r, c)));
  return a;
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols) {
  const std::vector<double> v = as_doubles(j);
  if (v.size() != static_cast<std::size_t>(rows * cols)) {
    throw IoError("matrix has " + std::to_string(v.size()) + " entries, expected " +
                  std::to_string(rows * cols));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(number(v(k)));
  return a;
}

Vector vector_from_json(const Json& j) {
  const std::vector<double> v = as_doubles(j);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json matrix_set_to_json(const MatrixSet& set) {
  Json ms = Json::array();
  for (const Matrix& m : set.matrices()) ms.push_back(matrix_to_json(m));
  return Json{{"d", set.dim()}, {"N", set.size()}, {"matrices", ms}};
}

MatrixSet matrix_set_from_json(const Json& j) {
  const Eigen::Index d = as_index(field(j, "d"), "d");
  const Eigen::Index n = as_index(field(j, "N"), "N");
  const Json& ms = field(j, "matrices");
  if (!ms.is_array() || ms.size() != static_cast<std::size_t>(n)) {
    throw IoError("'matrices' must hold N entries");
  }
  std::vector<Matrix> out;
  for (const Json& m : ms) out.push_back(matrix_from_json(m, d, d));
  return MatrixSet(d, std::move(out));
}

Json ground_truth_to_json(const GroundTruthModel& gt) {
  Json j = matrix_set_to_json(gt.observed_set());
  j["V"] = matrix_to_json(gt.v);
  j["lambda"] = matrix_to_json(Matrix(gt.lambda.transpose()));
  Json w = Json::array();
  for (const Matrix& m : gt.noise) w.push_back(matrix_to_json(m));
  j["W"] = w;
  j["sigma"] = number(gt.sigma);
  return j;
}

GroundTruthModel ground_truth_from_json(const Json& j) {
  const Eigen::Index d = as_index(field(j, "d"), "d");
  const Eigen::Index n = as_index(field(j, "N"), "N");
  GroundTruthModel gt;
  gt.v = matrix_from_json(field(j, "V"), d, d);
  gt.lambda = matrix_from_json(field(j, "lambda"), d, n).transpose();
  const Json& w = field(j, "W");
  if (!w.is_array() || w.size() != static_cast<std::size_t>(n)) throw IoError("'W' must hold N entries");
  for (const Json& m : w) gt.noise.push_back(matrix_from_json(m, d, d));
  gt.sigma = as_double(field(j, "sigma"), "sigma");
  gt.validate();
  return gt;
}

Json tensor_to_json(const TensorFile& f) {
  Json data = Json::array();
  for (double x : f.tensor.data()) data.push_back(number(x));
  Json j{{"N", f.tensor.size()}, {"data", data}};
  if (f.z) {
    j["Z"] = matrix_to_json(*f.z);
    j["d"] = f.z->cols();
  }
  if (f.sigma) j["sigma"] = number(*f.sigma);
  if (f.eps) j["eps"] = number(*f.eps);
  return j;
}

TensorFile tensor_from_json(const Json& j) {
  const Eigen::Index n = as_index(field(j, "N"), "N");
  TensorFile f{Tensor3(n, as_doubles(field(j, "data"))), std::nullopt, std::nullopt, std::nullopt};
  if (j.contains("Z")) {
    const Eigen::Index d = j.contains("d") ? as_index(j["d"], "d") : n;
    f.z = matrix_from_json(j["Z"], n, d);
  }
  if (j.contains("sigma")) f.sigma = as_double(j["sigma"], "sigma");
  if (j.contains("eps")) f.eps = as_double(j["eps"], "eps");
  return f;
}

Json frame_to_json(const OrthogonalFrame& u) { return Json{{"d", u.dim()}, {"U", matrix_to_json(u.matrix())}}; }

OrthogonalFrame frame_from_json(const Json& j) {
  const Eigen::Index d = as_index(field(j, "d"), "d");
  return OrthogonalFrame(matrix_from_json(field(j, "U"), d, d));
}

Json trace_to_json(const DescentTrace& trace) {
  Json loss = Json::array(), grad = Json::array(), step = Json::array();
  for (const DescentStep& s : trace.steps) {
    loss.push_back(number(s.loss));
    grad.push_back(number(s.grad_norm));
    step.push_back(number(s.step));
  }
  return Json{{"loss", loss},
              {"grad_norm", grad},
              {"step", step},
              {"iterations", trace.iterations()},
              {"termination", termination_name(trace.termination)}};
}

Json bound_report_to_json(const BoundReport& r) {
  Json j{{"alpha_apriori", number(r.alpha_apriori)},
         {"alpha_explicit", number(r.alpha_explicit)},
         {"alpha_aposteriori", number(r.alpha_aposteriori)},
         {"gamma", number(r.gamma)},
         {"kappa", number(r.kappa)},
         {"epsilon", number(r.epsilon)},
         {"a_alpha", number(r.a_alpha)},
         {"a_sigma", number(r.a_sigma)},
         {"alpha_max", number(r.alpha_max)},
         {"sigma_max", number(r.sigma_max)},
         {"t_tilde_sigma_min", number(r.t_tilde_sigma_min)},
         {"predicted_direction", matrix_to_json(r.predicted_direction.matrix())},
         {"predicted_alpha", number(r.predicted_direction.norm())},
         {"eigenvalue_error", number(r.eigenvalue_error)}};
  j["observed_alpha"] = r.observed_alpha ? number(*r.observed_alpha) : Json(nullptr);
  return j;
}

Json sweep_report_to_json(const SweepReport& r) {
  Json points = Json::array();
  for (const SweepPoint& p : r.points) {
    points.push_back(Json{{"sigma", number(p.sigma)},
                          {"alpha", number(p.alpha)},
                          {"alpha_apriori", number(p.alpha_apriori)},
                          {"alpha_explicit", number(p.alpha_explicit)},
                          {"alpha_aposteriori", number(p.alpha_aposteriori)},
                          {"direction_residual", number(p.direction_residual)},
                          {"sigma_max", number(p.sigma_max)},
                          {"above_sigma_max", p.above_sigma_max},
                          {"failures", p.failures}});
  }
  Json sig = Json::array();
  for (double s : r.sigmas) sig.push_back(number(s));
  return Json{{"sigmas", sig},
              {"points", points},
              {"alpha_slope", number(r.alpha_slope)},
              {"residual_slope", number(r.residual_slope)},
              {"apriori_slope", number(r.apriori_slope)},
              {"aposteriori_slope", number(r.aposteriori_slope)}};
}

Json verify_report_to_json(const VerifyReport& r) {
  Json recs = Json::array();
  for (const TrialRecord& t : r.records) {
    recs.push_back(Json{{"seed", t.seed},
                        {"ok", t.ok},
                        {"error", t.error},
                        {"alpha", number(t.alpha)},
                        {"alpha_apriori", number(t.alpha_apriori)},
                        {"alpha_explicit", number(t.alpha_explicit)},
                        {"alpha_aposteriori", number(t.alpha_aposteriori)},
                        {"eigenvalue_error", number(t.eigenvalue_error)},
                        {"eigenvalue_bound", number(t.eigenvalue_bound)},
                        {"apriori_pass", t.apriori_pass},
                        {"explicit_pass", t.explicit_pass},
                        {"aposteriori_pass", t.aposteriori_pass},
                        {"eigenvalue_pass", t.eigenvalue_pass},
                        {"apriori_le_explicit", t.apriori_le_explicit}});
  }
  return Json{{"sigma", number(r.sigma)},
              {"trials", r.trials},
              {"failures", r.failures},
              {"apriori_fraction", number(r.apriori_fraction)},
              {"explicit_fraction", number(r.explicit_fraction)},
              {"aposteriori_fraction", number(r.aposteriori_fraction)},
              {"eigenvalue_fraction", number(r.eigenvalue_fraction)},
              {"apriori_le_explicit_fraction", number(r.apriori_le_explicit_fraction)},
              {"records", recs}};
}

Json tensor_verify_report_to_json(const TensorVerifyReport& r) {
  Json recs = Json::array();
  for (const TensorTrialRecord& t : r.records) {
    recs.push_back(Json{{"seed", t.seed},
                        {"ok", t.ok},
                        {"error", t.error},
                        {"kappa", number(t.kappa)},
                        {"max_error", number(t.max_error)},
                        {"bound_proof", number(t.bound_proof)},
                        {"bound_statement", number(t.bound_statement)},
                        {"proof_pass", t.proof_pass},
                        {"statement_pass", t.statement_pass}});
  }
  return Json{{"sigma", number(r.sigma)},
              {"eps", number(r.eps)},
              {"trials", r.trials},
              {"failures", r.failures},
              {"proof_fraction", number(r.proof_fraction)},
              {"statement_fraction", number(r.statement_fraction)},
              {"records", recs}};
}

}  // namespace jschur
