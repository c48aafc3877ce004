#pragma once

#include <stdexcept>
#include <string>

namespace feasik {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameter ranges, malformed documents, dimension mismatches.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A constraint index outside of the pool.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// f(x) > 0 with a zero subgradient: the sublevel set {f <= 0} is empty.
class InconsistentConstraint : public Error {
 public:
  using Error::Error;
};

/// A caller-side hypothesis does not hold (e.g. reference point outside Q).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic left the representable range (NaN/Inf iterate, overrelaxation underflow).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace feasik
