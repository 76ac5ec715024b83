#include "fbsde/error.hpp"

namespace fbsde {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Box: return "BoxError";
    case ErrorKind::Guard: return "GuardViolation";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::Degenerate: return "DegenerateError";
    case ErrorKind::Precondition: return "PreconditionError";
    case ErrorKind::Contraction: return "ContractionFailure";
    case ErrorKind::FixedPoint: return "FixedPointFailure";
    case ErrorKind::BandEscape: return "BandEscape";
    case ErrorKind::BandExit: return "BandExitError";
    case ErrorKind::Monotonicity: return "MonotonicityError";
    case ErrorKind::Inversion: return "InversionError";
    case ErrorKind::Bound: return "BoundError";
    case ErrorKind::NotSolvable: return "NotSolvable";
    case ErrorKind::SingularHat: return "SingularHat";
    case ErrorKind::Quadrature: return "QuadratureError";
    case ErrorKind::Usage: return "UsageError";
    case ErrorKind::Io: return "IoError";
    }
    return "Error";
}

void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace fbsde
