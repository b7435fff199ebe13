#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elicit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed input line. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when filtering or splitting leaves nothing to work with.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace elicit
