#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace camo {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (mesh, manifest, config). Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input that parses but violates a geometric precondition.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Mismatched buffer/tensor dimensions between pipeline stages.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The dark-light mask render does not separate textured from non-textured gray levels.
class SeparationError : public Error {
 public:
  using Error::Error;
};

/// Failure writing or reading an artifact on disk.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered in an optimization or training loop.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace camo
