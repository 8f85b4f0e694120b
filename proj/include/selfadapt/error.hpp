#pragma once

#include <stdexcept>
#include <string>

namespace selfadapt {

enum class ErrorKind {
  MissingFile,
  EmptyInput,
  ParseError,
  InvalidArgument,
  DatasetTooSmall,
  DimensionMismatch,
  NoResidualMass,
  AmbiguousRegion,
  Undefined,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "missing file";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::ParseError: return "parse error";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::DatasetTooSmall: return "dataset too small";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::NoResidualMass: return "no residual mass";
    case ErrorKind::AmbiguousRegion: return "ambiguous region";
    case ErrorKind::Undefined: return "undefined";
    case ErrorKind::Config: return "config error";
  }
  return "unknown";
}

/// Every library failure is reported through this type; `kind()` tells callers
/// which contract was violated without having to parse the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace selfadapt
