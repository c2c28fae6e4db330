#pragma once

#include <stdexcept>
#include <string>

namespace vsdl {

// Root of every error raised by the library. The CLI maps NumericError to
// exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor dimensions disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid configuration (model spec, split ratios, geometry).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad data handed in by the caller (unnormalized pixels, malformed stacks).
class InputError : public Error {
 public:
  using Error::Error;
};

// A requested range is not available in the source data.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during training or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem and serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vsdl
