#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qems {

/// Stable error categories. The CLI maps these onto exit codes and prints the
/// name in every diagnostic, so existing names must not change.
enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  step_underflow,
  positivity_violation,
  invariant_violation,
  ill_conditioned,
  saturation,
  division_hazard,
  config,
  io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::step_underflow: return "step_underflow";
    case ErrorCode::positivity_violation: return "positivity_violation";
    case ErrorCode::invariant_violation: return "invariant_violation";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
    case ErrorCode::saturation: return "saturation";
    case ErrorCode::division_hazard: return "division_hazard";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by time integration; carries the simulation time at which it failed.
class IntegrationError : public Error {
 public:
  IntegrationError(ErrorCode code, const std::string& what, double time)
      : Error(code, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace qems
