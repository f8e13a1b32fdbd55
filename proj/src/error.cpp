#include "ballistica/error.hpp"

namespace ballistica {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularBasis: return "SingularBasis";
    case ErrorCode::AsymmetricEdges: return "AsymmetricEdges";
    case ErrorCode::BadFraction: return "BadFraction";
    case ErrorCode::NotInBox: return "NotInBox";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::EmptyState: return "EmptyState";
    case ErrorCode::ZeroTime: return "ZeroTime";
    case ErrorCode::SupportExceedsGrid: return "SupportExceedsGrid";
    case ErrorCode::EigSolverFailure: return "EigSolverFailure";
    case ErrorCode::BoxTooLarge: return "BoxTooLarge";
    case ErrorCode::AliasRisk: return "AliasRisk";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::DepthInsufficient: return "DepthInsufficient";
  }
  return "Unknown";
}

}  // namespace ballistica
