#pragma once

#include <stdexcept>
#include <string>

namespace chainsde {

enum class ErrorCode {
  UnknownModel,
  NonFiniteDrift,
  UnstableStep,
  GridMismatch,
  DegenerateLaw,
  MissingDerivative,
  DimensionError,
  PairingError,
  TooFewSamples,
  BandwidthError,
  UnsupportedDrift,
  WeightCollapse,
  SigmaError,
  CFLViolation,
  BoundaryLeak,
  NonIdentifiable,
  DegenerateSample,
  SingularConditioning,
  InvalidArgument,
  ConfigError,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chainsde
