#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracnoether {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: bad expressions, schema violations,
/// mismatched grids, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation could not produce a finite, trustworthy result.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ValidationError(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Division by zero, logarithm of a non-positive number, non-finite intermediate, ...
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Requested feature is outside what the implementation covers.
class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace fracnoether
