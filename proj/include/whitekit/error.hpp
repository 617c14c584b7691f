#pragma once

#include <stdexcept>
#include <string>

namespace whitekit {

enum class ErrorKind {
  InvalidMatrix,   // bad shape or non-finite entry
  ShapeMismatch,
  NonSymmetric,
  NoConvergence,
  DegenerateInput,
  ZeroTrace,
  BadGroupSize,
  InvalidConfig,
  ZeroMatrix,
  SingleClass,
  EmptyTrain,
  BadSpec,
  MalformedFile,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::ZeroTrace: return "ZeroTrace";
    case ErrorKind::BadGroupSize: return "BadGroupSize";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::EmptyTrain: return "EmptyTrain";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::MalformedFile: return "MalformedFile";
  }
  return "Unknown";
}

/// Failures that come from the arithmetic rather than from the caller's input.
inline bool is_numerical(ErrorKind kind) {
  return kind == ErrorKind::NoConvergence || kind == ErrorKind::ZeroTrace ||
         kind == ErrorKind::NonSymmetric;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace whitekit
