#pragma once

#include <stdexcept>
#include <string>

namespace dpkit {

enum class ErrorKind {
  BackendMismatch,
  DivisionByZero,
  PrecisionExhausted,
  InvalidStructure,
  SyntaxError,
  UnboundSortAnnotation,
  SortError,
  SignatureMismatch,
  ModulusOverflow,
  UnboundedExponent,
  MissingEps,
  NotStronglyRegular,
  NotInUnitarySide,
  InvariantMismatch,
  NonPortableParams,
  InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::BackendMismatch: return "BackendMismatch";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorKind::InvalidStructure: return "InvalidStructure";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnboundSortAnnotation: return "UnboundSortAnnotation";
    case ErrorKind::SortError: return "SortError";
    case ErrorKind::SignatureMismatch: return "SignatureMismatch";
    case ErrorKind::ModulusOverflow: return "ModulusOverflow";
    case ErrorKind::UnboundedExponent: return "UnboundedExponent";
    case ErrorKind::MissingEps: return "MissingEps";
    case ErrorKind::NotStronglyRegular: return "NotStronglyRegular";
    case ErrorKind::NotInUnitarySide: return "NotInUnitarySide";
    case ErrorKind::InvariantMismatch: return "InvariantMismatch";
    case ErrorKind::NonPortableParams: return "NonPortableParams";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so
/// the CLI can emit a structured error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind), detail_(msg) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Parse failure with a 1-based source position.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, int line, int column)
      : Error(ErrorKind::SyntaxError,
              msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace dpkit
