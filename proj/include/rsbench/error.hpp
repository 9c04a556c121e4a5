// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rsbench {

// Error taxonomy. Each kind maps onto one CLI exit code (see exit_code()).
enum class ErrorKind {
  Parse,
  Validation,
  Io,
  MissingArtifact,
  UnsupportedRegime,
  MissingRewrite,
  InvalidReference,
  LengthMismatch,
  DegenerateClean,
  EmptyPool,
  EmptyBatch,
  EmptyInput,
  StageDependencyMissing,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::UnsupportedRegime: return "UnsupportedRegime";
    case ErrorKind::MissingRewrite: return "MissingRewrite";
    case ErrorKind::InvalidReference: return "InvalidReference";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateClean: return "DegenerateClean";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::StageDependencyMissing: return "StageDependencyMissing";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for an error: 2 config, 3 missing dependency, 4 validation
/// failure of inputs, 1 anything else.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::StageDependencyMissing:
    case ErrorKind::MissingArtifact:
    case ErrorKind::MissingRewrite: return 3;
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::InvalidReference:
    case ErrorKind::LengthMismatch:
    case ErrorKind::DegenerateClean:
    case ErrorKind::EmptyPool:
    case ErrorKind::EmptyBatch:
    case ErrorKind::EmptyInput:
    case ErrorKind::UnsupportedRegime: return 4;
    case ErrorKind::Io: return 1;
  }
  return 1;
}

}  // namespace rsbench
