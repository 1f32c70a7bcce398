#include "jschur/errors.hpp"

namespace jschur {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeDeterminant: return "NegativeDeterminant";
    case ErrorCode::LogBranchAmbiguous: return "LogBranchAmbiguous";
    case ErrorCode::ComplexEigenvalues: return "ComplexEigenvalues";
    case ErrorCode::NearDefective: return "NearDefective";
    case ErrorCode::NoSeparatingBeta: return "NoSeparatingBeta";
    case ErrorCode::LineSearchStalled: return "LineSearchStalled";
    case ErrorCode::SingularOperator: return "SingularOperator";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::NonUnitBeta: return "NonUnitBeta";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularZ: return "SingularZ";
    case ErrorCode::ZeroColumnSum: return "ZeroColumnSum";
    case ErrorCode::SingularY: return "SingularY";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NoComparableFrame: return "NoComparableFrame";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace jschur
