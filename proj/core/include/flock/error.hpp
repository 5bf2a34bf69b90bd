#pragma once

#include <stdexcept>
#include <string>

namespace flock {

// Base of every error raised by the library. The CLI maps the subclasses onto
// its exit-code contract (1 config/usage, 2 invariant, 3 numeric).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. |mu| > 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration (kernel spec, spatial kernel, CLI).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An operation was called with inputs violating its documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or a breakdown of floating-point evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A discrete linear system could not be solved reliably.
class SolverError : public NumericError {
 public:
  SolverError(const std::string& what, double condition_estimate)
      : NumericError(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// A mathematical invariant that must hold for converged results was violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Field state rejected (non-unit orientation, negative density, bad grid).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace flock
