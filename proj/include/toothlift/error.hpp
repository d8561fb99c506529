#pragma once

#include <stdexcept>
#include <string>

namespace toothlift {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (mesh, label file, PNG, buffer sidecar).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Per-vertex data whose length disagrees with the mesh.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Unknown FDI code or out-of-range class index.
class LabelError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Operation requires state the object does not carry (e.g. labels).
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A metric whose denominator is empty for the given inputs.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace toothlift
