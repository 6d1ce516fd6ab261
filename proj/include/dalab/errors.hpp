#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dalab {

/// Root of every error thrown by the library. The CLI maps the three
/// direct subclasses onto exit codes 1 (config), 2 (data) and 3 (invariant).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class UnsupportedPolicyError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InfeasibleBudgetError : public ConfigError {
 public:
  InfeasibleBudgetError(const std::string& what, double alpha)
      : ConfigError(what), alpha_(alpha) {}
  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
};

class MalformedLineError : public DataError {
 public:
  MalformedLineError(const std::string& what, std::size_t line)
      : DataError(what), line_(line) {}
  /// 1-based line number in the input stream.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyCorpusError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyPoolError : public DataError {
 public:
  using DataError::DataError;
};

class LabelMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeMismatchError : public DataError {
 public:
  ShapeMismatchError(const std::string& what, std::size_t sentence)
      : DataError(what), sentence_(sentence) {}
  std::size_t sentence() const noexcept { return sentence_; }

 private:
  std::size_t sentence_;
};

}  // namespace dalab
