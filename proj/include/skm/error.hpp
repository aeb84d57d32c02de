#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skm {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A caller broke an operation's precondition (bad k, bad m, wrong shapes, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(const std::string& where, std::size_t expected, std::size_t got)
      : InvalidArgument(where + ": dimension mismatch (expected " + std::to_string(expected) +
                        ", got " + std::to_string(got) + ")") {}
};

}  // namespace skm
