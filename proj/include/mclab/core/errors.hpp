#pragma once

#include <stdexcept>
#include <string>

namespace mclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A configuration is inconsistent or violates a precondition (stability, exclusivity, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Quadrature failed to converge, a stream produced non-finite values, etc.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Psychometric / model fitting could not produce an estimate.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A referenced object (session, trial, stimulus) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// The request conflicts with the current state (e.g. a trial answered twice).
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace mclab
