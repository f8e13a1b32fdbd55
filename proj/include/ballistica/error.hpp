#pragma once

#include <stdexcept>
#include <string>

namespace ballistica {

// Failure classes, split into invalid-input vs numerical failures so the CLI
// can map them onto distinct exit codes.
enum class ErrorCode {
  // invalid input / validation
  InvalidArgument,
  SingularBasis,
  AsymmetricEdges,
  BadFraction,
  NotInBox,
  NotNormalized,
  EmptyState,
  ZeroTime,
  SupportExceedsGrid,
  // numerical failures
  EigSolverFailure,
  BoxTooLarge,
  AliasRisk,
  NoConvergence,
  DegenerateDenominator,
  DepthInsufficient,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

  // true for problems with the inputs (CLI exit 2), false for numerical
  // failures encountered mid-computation (CLI exit 3)
  bool is_input_error() const { return code_ < ErrorCode::EigSolverFailure; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

}  // namespace ballistica
