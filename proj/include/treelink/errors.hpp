#pragma once

#include <stdexcept>
#include <string>

namespace treelink {

// Machine-readable failure codes. The CLI maps these to exit statuses:
// NumericalFailure and PoorMixing exit 2, everything else exits 1.
enum class ErrorCode {
  EmptyInput,
  CandidateSearchFailed,
  NumericalFailure,
  InvalidTailParameter,
  PoorMixing,
  CovariateUnavailable,
  DegenerateCovariate,
  ParseError,
  SchemaError,
  ValidationError,
  NoUsableDraws,
  PackingInfeasible,
  InvalidConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace treelink
