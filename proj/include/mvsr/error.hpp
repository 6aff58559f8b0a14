#pragma once

#include <stdexcept>
#include <string>

namespace mvsr {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents are empty, mismatched, or violate a kernel precondition.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value argument is out of its domain (nonpositive runtime, C <= 0, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// A kernel produced NaN or Inf while validation was enabled.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Weight store does not match the architecture (missing, extra or misshaped tensors).
class WeightError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Clip directory holds no frames.
class NoFramesError : public IoError {
 public:
  using IoError::IoError;
};

// Binary container errors. Each failure mode has its own type so callers and
// tests can tell them apart.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DuplicateNameError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedDtypeError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace mvsr
