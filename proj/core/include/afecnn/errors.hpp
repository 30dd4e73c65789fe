#pragma once

#include <stdexcept>
#include <string>

namespace afecnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value outside the accepted domain (labels, indices, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// API misuse: wrong call order, unknown option, empty inputs.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. The message names the offending line when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint and a dataset (or two configs) disagree on joints, classes, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace afecnn
