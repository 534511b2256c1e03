#pragma once

#include <stdexcept>
#include <string>

namespace codi {

/// Base of every error the engine raises. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input-format family (CLI exit code 2).
class FormatError : public Error {
 public:
  using Error::Error;
};
class CorruptionError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Validation / numeric family (CLI exit code 3).
class ValidationError : public Error {
 public:
  using Error::Error;
};
class DegenerateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};
class InfeasibleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};
class InsufficientKeypointsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};
class NoValidPairsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Bad caller-supplied parameter (CLI exit code 1).
class ParameterError : public Error {
 public:
  using Error::Error;
};

}  // namespace codi
