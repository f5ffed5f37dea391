#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spmm {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Latitude/longitude outside the WGS-84 range, non-finite, or too far from
/// a projection origin.
class InvalidCoordinate : public Error {
 public:
  using Error::Error;
};

/// A precondition on a domain operation was violated (k too large, empty
/// trajectory, zero-length segment, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind {
  Syntax,
  InvalidCoordinate,
  NonMonotonicTime,
  EmptyInput,
  DuplicateIdentifier,
  TooFewVertices,
  DanglingNode,
  UnknownEdge,
  Io,
};

/// Input file could not be turned into a valid domain object. `row()` is the
/// 1-based line number in the file, or 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, std::size_t row, const std::string& what)
      : Error(row ? what + " (line " + std::to_string(row) + ")" : what),
        kind_(kind),
        row_(row) {}

  ParseErrorKind kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }

 private:
  ParseErrorKind kind_;
  std::size_t row_;
};

}  // namespace spmm
