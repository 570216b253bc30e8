#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roverkf {

/// Failure category; maps one-to-one onto CLI exit codes.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad parameters, dimension mismatches, unknown config keys.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Invalid sensor data: non-monotone time, bad dt, non-finite samples.
class StreamError : public Error {
 public:
  explicit StreamError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Malformed input file. `line()` is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ErrorKind::Data, file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Metrics could not be computed (empty series, non-overlapping spans, no truth).
class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Factorization failure. Carries the 2-norm condition number of the offending matrix.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition_number)
      : Error(ErrorKind::Numerical,
              what + " (condition number " + std::to_string(condition_number) + ")"),
        condition_number_(condition_number) {}
  /// Same failure with `context` prefixed to the message.
  NumericalError(const std::string& context, const NumericalError& inner)
      : Error(ErrorKind::Numerical, context + ": " + inner.what()), condition_number_(inner.condition_number_) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Data:
      return 3;
    case ErrorKind::Numerical:
      return 4;
  }
  return 1;
}

}  // namespace roverkf
