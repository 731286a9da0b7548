#pragma once

#include <stdexcept>
#include <string>

namespace cavsync {

// Base of every library error. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or parameter values (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Integration failures, step-size underflow, norm underflow (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Hilbert-space dimension above the configured cap, or mismatched layouts (exit code 4).
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace cavsync
