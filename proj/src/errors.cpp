#include "treelink/errors.hpp"

namespace treelink {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::CandidateSearchFailed: return "CandidateSearchFailed";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::InvalidTailParameter: return "InvalidTailParameter";
    case ErrorCode::PoorMixing: return "PoorMixing";
    case ErrorCode::CovariateUnavailable: return "CovariateUnavailable";
    case ErrorCode::DegenerateCovariate: return "DegenerateCovariate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::NoUsableDraws: return "NoUsableDraws";
    case ErrorCode::PackingInfeasible: return "PackingInfeasible";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace treelink
