#pragma once

#include <stdexcept>
#include <string>

namespace windownet {

/// Invalid argument, shape, or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A window whose affine weight is zero cannot be mapped back to (level, width).
class DegenerateWindowError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// File missing, unreadable, truncated, or in an unsupported format.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input whose content violates a data contract (e.g. corrupt payload).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace windownet
