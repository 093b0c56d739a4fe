#pragma once

#include <stdexcept>
#include <string>

namespace degcount {

enum class ErrorKind {
  InvalidInput,
  OddParity,
  Infeasible,
  NotStrictlyFeasible,
  DivergedToBoundary,
  MaxIterExceeded,
  NotPositiveDefinite,
  KernelDimensionNotOne,
  IndexOutOfRange,
  TooLarge,
  NotAnInteger,
  TrialsExhausted,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::OddParity: return "OddParity";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NotStrictlyFeasible: return "NotStrictlyFeasible";
    case ErrorKind::DivergedToBoundary: return "DivergedToBoundary";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::KernelDimensionNotOne: return "KernelDimensionNotOne";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NotAnInteger: return "NotAnInteger";
    case ErrorKind::TrialsExhausted: return "TrialsExhausted";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map outcomes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace degcount
