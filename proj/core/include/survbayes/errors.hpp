#pragma once

#include <stdexcept>
#include <string>

namespace survbayes {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or degenerate input data (CLI exit code 4).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed run configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An optimizer or sampler failed to reach its stopping criterion (CLI exit code 3).
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A quantity that should be finite is not, e.g. a Cox fit under monotone likelihood.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace survbayes
