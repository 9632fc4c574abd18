#pragma once

#include <stdexcept>
#include <string>

namespace aperture {

/// Thrown when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// apply_baffle only understands planar rectangular grids.
class UnsupportedLayoutError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The channel-mean reference spectrum vanished everywhere.
class DegenerateReferenceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// File system or format failures (missing files, malformed WAV/JSON).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aperture
