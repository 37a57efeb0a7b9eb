#include "eqstate/errors.hpp"

namespace eqstate {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::AtCriticalOrBoundary: return "AtCriticalOrBoundary";
    case ErrorKind::NotInImage: return "NotInImage";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::OrbitTruncated: return "OrbitTruncated";
    case ErrorKind::NotMarkovCompatible: return "NotMarkovCompatible";
    case ErrorKind::ToleranceFailure: return "ToleranceFailure";
    case ErrorKind::UnknownGenerator: return "UnknownGenerator";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::DivergentEntropy: return "DivergentEntropy";
    case ErrorKind::InfiniteMeanReturn: return "InfiniteMeanReturn";
    case ErrorKind::OrbitHitsCritical: return "OrbitHitsCritical";
    case ErrorKind::NoFiniteRoot: return "NoFiniteRoot";
    case ErrorKind::NoNeutralPoints: return "NoNeutralPoints";
    case ErrorKind::OrbitEscaped: return "OrbitEscaped";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

}  // namespace eqstate
