#pragma once

#include <stdexcept>
#include <string>

namespace latentdyn {

/// Bad shapes, bad arguments, inconsistent files or configs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. The message names the location (line, net, layer).
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A computation produced a NaN or an infinity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named input file does not exist. Treated as a usage error.
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A primitive was asked for a rule it does not have.
class UnsupportedOpError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace latentdyn
