#pragma once

#include <stdexcept>
#include <string>

namespace stscale {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed specs, out-of-domain arguments, ill-ordered
/// intervals.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateModel : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateInterval : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RootFindingFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The implicit diagonal of the Volterra march lost stability; refine the grid.
class StepTooLarge : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivisionByZero : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stscale
