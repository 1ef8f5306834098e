#pragma once

#include <stdexcept>
#include <string>

namespace qsim {

enum class ErrorCode {
  KindMismatch,
  DimsMismatch,
  InvalidSubsystem,
  InvalidDimension,
  InvalidIndex,
  TooLarge,
  IntegrationFailure,
  EnsembleFailure,
  SteadyStateFailure,
  DfdOverflow,
  InvalidGrid,
  InvalidScenario,
};

const char* error_code_name(ErrorCode code);

/// Library exception carrying a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw_error(code, message);
}

}  // namespace qsim
