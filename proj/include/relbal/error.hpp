#pragma once

#include <stdexcept>
#include <string>

namespace relbal {

/// Failure categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  size,
  unsupported,
  domain,
  accuracy,
  definiteness,
  orbit,
  degeneracy,
  evaluation,
  precondition,
  not_balanced,
  config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::size: return "size";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::domain: return "domain";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::definiteness: return "definiteness";
    case ErrorKind::orbit: return "orbit";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::not_balanced: return "not-balanced";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace relbal
