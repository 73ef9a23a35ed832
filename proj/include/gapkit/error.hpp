#pragma once

#include <stdexcept>
#include <string>

namespace gapkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a type invariant (NaN, empty matrix, shape mismatch...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on an operation argument does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// File system or format failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a result meeting its contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gapkit
