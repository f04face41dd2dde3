#pragma once

#include <stdexcept>
#include <string>

namespace tandem {

// Base for every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An argument outside an operation's domain, e.g. a price not in the price set.
class DomainError : public Error {
 public:
  using Error::Error;
};

// State space too large to index.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// A solve did not meet its accuracy contract.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  explicit NumericalError(const std::string& what) : NumericalError(what, 0.0) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Iterative method hit its iteration cap.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A bound was requested outside the regime where it holds (utilization >= 1).
class InapplicableError : public Error {
 public:
  using Error::Error;
};

}  // namespace tandem
