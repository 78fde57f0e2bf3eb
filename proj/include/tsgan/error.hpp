#pragma once

#include <stdexcept>
#include <string>

namespace tsgan {

/// Base of every error thrown by the library. The CLI maps the concrete
/// subclass onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values or violated preconditions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor shapes.
class ShapeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Inconsistent pipeline configuration.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content (PGM, checkpoint, .spec sidecar).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV body.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : FormatError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite values where finite ones are required (e.g. a diverging loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsgan
