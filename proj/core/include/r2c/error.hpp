#pragma once

#include <stdexcept>
#include <string>

namespace r2c {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter is outside the range an operation accepts.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A reliability target can never be met (e.g. zeta = 1).
class UnattainableTarget : public Error {
 public:
  using Error::Error;
};

/// F >= N/3: no representative count reaches the requested resiliency.
class InfeasibleResiliency : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace r2c
