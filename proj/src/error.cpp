#include "cgeo/error.hpp"

namespace cgeo {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownIdentifier: return "UnknownIdentifier";
    case Errc::VariableOutOfRange: return "VariableOutOfRange";
    case Errc::EvalDomainError: return "EvalDomainError";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::DomainError: return "DomainError";
    case Errc::NonPositiveFactor: return "NonPositiveFactor";
    case Errc::ConstraintViolation: return "ConstraintViolation";
    case Errc::StepFailure: return "StepFailure";
    case Errc::MaxStepsExceeded: return "MaxStepsExceeded";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DegenerateDirection: return "DegenerateDirection";
    case Errc::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case Errc::NoExitWithinTrace: return "NoExitWithinTrace";
    case Errc::Unsupported: return "Unsupported";
    case Errc::OutOfSafeRadius: return "OutOfSafeRadius";
    case Errc::MeshTooCoarse: return "MeshTooCoarse";
  }
  return "Unknown";
}

}  // namespace cgeo
