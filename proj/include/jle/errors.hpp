#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jle {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch between related objects (query dim vs matrix dim, etc).
struct DimensionError : Error {
  using Error::Error;
};

// Parameter outside its stated range (epsilon, delta, fraction, ...).
struct DomainError : Error {
  using Error::Error;
};

// A label vector with more active entries than the sparsity cap allows.
struct SparsityError : Error {
  using Error::Error;
};

// A label outside {1..C}; message identifies the offending row.
struct LabelRangeError : Error {
  using Error::Error;
};

// Exhaustive enumeration would exceed the candidate budget.
struct BudgetError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Text input that does not parse. line is 1-based.
struct ParseError : Error {
  std::size_t line;
  ParseError(std::size_t line_, const std::string& what_)
      : Error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

// A bound was requested for a matrix that fails its distortion certificate;
// the bound is vacuous there and is not asserted.
struct JlpViolationError : Error {
  using Error::Error;
};

// A bound was requested outside the regime it is stated for.
struct ConditionError : Error {
  using Error::Error;
};

}  // namespace jle
