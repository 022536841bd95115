#pragma once

#include <stdexcept>
#include <string>

namespace conedef {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad input: the CLI maps these to exit code 1.
class InputError : public Error {
public:
  using Error::Error;
};

class ParseError : public InputError {
public:
  ParseError(const std::string& msg, int line, int column)
      : InputError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

class DegreeMismatch : public InputError {
public:
  using InputError::InputError;
};

class ValidationError : public InputError {
public:
  using InputError::InputError;
};

class TruncationExhausted : public InputError {
public:
  using InputError::InputError;
};

class NotNormalizedChart : public InputError {
public:
  using InputError::InputError;
};

// Computation declined: exit code 2.
class Refused : public Error {
public:
  using Error::Error;
};

class PreconditionFailure : public Refused {
public:
  using Refused::Refused;
};

class ContractionFailure : public Refused {
public:
  ContractionFailure(const std::string& msg, double ratio) : Refused(msg), ratio_(ratio) {}
  double ratio() const { return ratio_; }

private:
  double ratio_;
};

class NotNormalized : public Refused {
public:
  using Refused::Refused;
};

}  // namespace conedef
