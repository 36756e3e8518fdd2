#include "pfenergy/error.hpp"

namespace pfenergy {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SingularReduction: return "SingularReduction";
    case ErrorCode::UnsupportedTopology: return "UnsupportedTopology";
    case ErrorCode::NotConstantRatio: return "NotConstantRatio";
    case ErrorCode::PhaseOutOfRange: return "PhaseOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::NoReactiveSolution: return "NoReactiveSolution";
    case ErrorCode::UnsupportedSign: return "UnsupportedSign";
  }
  return "Unknown";
}

}  // namespace pfenergy
