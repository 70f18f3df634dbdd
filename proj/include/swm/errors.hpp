#pragma once

#include <stdexcept>
#include <string>

namespace swm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, parameters out of range, or violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf in a trajectory, quadrature failure, non-converging iteration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Processes that must share one noise table were driven by different ones.
class CouplingError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace swm
