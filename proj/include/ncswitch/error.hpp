#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ncswitch {

enum class ErrorCode {
  IndexOutOfRange,
  SelfLoop,
  FullGraphDisconnected,
  LengthMismatch,
  CatalogTooLarge,
  LambdaTooLarge,
  ExplosionGuard,
  DimensionMismatch,
  Infeasible,
  VerificationFailed,
  BigMTooSmall,
  NumericalFailure,
  SolverFailure,
  ParseError,
  SchemaError,
  IoError,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::FullGraphDisconnected: return "FullGraphDisconnected";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::CatalogTooLarge: return "CatalogTooLarge";
    case ErrorCode::LambdaTooLarge: return "LambdaTooLarge";
    case ErrorCode::ExplosionGuard: return "ExplosionGuard";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
    case ErrorCode::BigMTooSmall: return "BigMTooSmall";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ncswitch
