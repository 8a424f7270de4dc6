#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twofold {

enum class ErrorCode {
  DenominatorUnderflow,
  StepLimit,
  LeftDomain,
  NoReturn,
  NoFold,
  MultipleFolds,
  OutOfDomain,
  FitIllConditioned,
  GridTooCoarse,
  NoRoot,
  MultipleRoots,
  BracketFailure,
  DomainError,
  IncompatibleInventory,
  ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DenominatorUnderflow: return "DenominatorUnderflow";
    case ErrorCode::StepLimit: return "StepLimit";
    case ErrorCode::LeftDomain: return "LeftDomain";
    case ErrorCode::NoReturn: return "NoReturn";
    case ErrorCode::NoFold: return "NoFold";
    case ErrorCode::MultipleFolds: return "MultipleFolds";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::FitIllConditioned: return "FitIllConditioned";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::IncompatibleInventory: return "IncompatibleInventory";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace twofold
