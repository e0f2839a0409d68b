#pragma once

#include <stdexcept>
#include <string>

namespace robotability {

/// Base of all engine errors. `exit_code()` maps onto the CLI contract.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad input: malformed records, unknown ids, violated preconditions.
class ValidationError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Data could not be turned into features (missing source, all-missing column, ...).
class DataError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Iterative numerics failed (non-convergence).
class NumericalError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace robotability
