#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad level, empty batch, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A point annotation fell outside the scene square.
class BoundsError : public Error {
 public:
  BoundsError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Malformed text input. Line numbers are 1-based; 0 means "whole file".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  /// The same error attributed to a named source, e.g. "a.dmap: line 3: ...".
  ParseError(const std::string& source, const ParseError& e)
      : Error(source + ": " + e.what()), line_(e.line_) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A variance estimate collapsed to zero and no guard was supplied.
class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

}  // namespace pml
