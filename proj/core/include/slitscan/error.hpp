#pragma once

#include <stdexcept>
#include <string>

namespace slitscan {

/// Base of every error raised by the library. The subclasses map one-to-one
/// onto the command-line exit codes (config 2, data 3, numerical 4).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid parameters, violated preconditions, unusable sampling.
class ConfigError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Argument outside the mathematical domain of a function.
class DomainError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Malformed or inconsistent input data (files, flux vectors).
class DataError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// A quantity cannot be computed from otherwise valid input.
class NumericalError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

} // namespace slitscan
