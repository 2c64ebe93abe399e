#pragma once

#include <stdexcept>
#include <string>

namespace mixsp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input record (TSV, vocabulary, JSON store, checkpoint).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration or degenerate arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or optimisation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined for the given input (constant data, single class, ...).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace mixsp
