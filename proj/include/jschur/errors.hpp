#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jschur {

/// Failure categories surfaced by the numerical routines. The CLI prints
/// the name of the code on stderr and exits with status 2.
enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NegativeDeterminant,
  LogBranchAmbiguous,
  ComplexEigenvalues,
  NearDefective,
  NoSeparatingBeta,
  LineSearchStalled,
  SingularOperator,
  DegenerateSpectrum,
  NonUnitBeta,
  RankDeficient,
  SingularZ,
  ZeroColumnSum,
  SingularY,
  TooLarge,
  NoComparableFrame,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace jschur
