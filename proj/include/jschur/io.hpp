#pragma once

// JSON file formats. Matrices are flat column-major arrays; lambda is N x d
// row-major. Output is canonical: sorted keys, shortest round-trip numbers,
// non-finite values written as null.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "jschur/bounds.hpp"
#include "jschur/harness.hpp"
#include "jschur/tensor.hpp"
#include "jschur/triangularizer.hpp"

namespace jschur {

using Json = nlohmann::json;

/// Unreadable file, malformed JSON, or missing/mistyped field.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string dump_canonical(const Json& j);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json matrix_set_to_json(const MatrixSet& set);
MatrixSet matrix_set_from_json(const Json& j);

Json ground_truth_to_json(const GroundTruthModel& gt);
GroundTruthModel ground_truth_from_json(const Json& j);

struct TensorFile {
  Tensor3 tensor;
  std::optional<ComponentMatrix> z;
  std::optional<double> sigma;
  std::optional<double> eps;
};

Json tensor_to_json(const TensorFile& f);
TensorFile tensor_from_json(const Json& j);

Json frame_to_json(const OrthogonalFrame& u);
OrthogonalFrame frame_from_json(const Json& j);

Json trace_to_json(const DescentTrace& trace);
Json bound_report_to_json(const BoundReport& r);
Json sweep_report_to_json(const SweepReport& r);
Json verify_report_to_json(const VerifyReport& r);
Json tensor_verify_report_to_json(const TensorVerifyReport& r);

}  // namespace jschur
