#include "chainsde/errors.hpp"

namespace chainsde {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::NonFiniteDrift: return "NonFiniteDrift";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DegenerateLaw: return "DegenerateLaw";
    case ErrorCode::MissingDerivative: return "MissingDerivative";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::PairingError: return "PairingError";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::BandwidthError: return "BandwidthError";
    case ErrorCode::UnsupportedDrift: return "UnsupportedDrift";
    case ErrorCode::WeightCollapse: return "WeightCollapse";
    case ErrorCode::SigmaError: return "SigmaError";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::BoundaryLeak: return "BoundaryLeak";
    case ErrorCode::NonIdentifiable: return "NonIdentifiable";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::SingularConditioning: return "SingularConditioning";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace chainsde
