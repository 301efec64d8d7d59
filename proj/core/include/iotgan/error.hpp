#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iotgan {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (schema mismatch, bad hyperparameter, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A metric was asked to summarise zero observations.
class EmptyEvaluationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Stratified splitting impossible, e.g. a class with a single row.
class StratificationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Training data cannot produce a meaningful model (e.g. one class only).
class DegenerateTrainingError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Caller broke an API contract (e.g. passing a substitute that is not frozen).
class ContractViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// NaN or infinity reached a computation that requires finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Line and column are 1-based; 0 means "not applicable".
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : ValidationError(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; wraps the underlying message with the stage name.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace iotgan
