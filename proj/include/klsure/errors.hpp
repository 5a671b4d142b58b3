#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace klsure {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside an operation's mathematical domain (negative counts,
/// non-positive probabilities, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but degenerate for the requested operation
/// (all-zero Poisson data, empty multinomial rows).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File and parse failures.
class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A solver iterate stopped being finite.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : NumericalError(what), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace klsure
