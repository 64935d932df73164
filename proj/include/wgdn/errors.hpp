#pragma once

#include <stdexcept>
#include <string>

namespace wgdn {

// Bad caller input: out-of-range ids, invalid hyper-parameters, malformed files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical breakdown: singular systems, non-convergence, non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// File system failures: missing or unreadable inputs, unwritable outputs.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wgdn
