#pragma once

#include <stdexcept>
#include <string>

namespace spongecake {

/// A model parameter lies outside its valid domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A direction sits exactly on the horizon where Λ is singular.
class GrazingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The half vector of an exactly antiparallel pair is undefined.
class DegenerateHalfVectorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Material text could not be parsed or failed validation.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                                          std::to_string(column) + ")"
                                    : what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Binary weight/table file is malformed (bad magic, version, truncation, non-finite data).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied uniform stream ran out of variates.
class StreamExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced non-finite or otherwise unusable values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spongecake
