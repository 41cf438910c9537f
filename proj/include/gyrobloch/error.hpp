#pragma once

#include <stdexcept>
#include <string>

namespace gyrobloch {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (frequency outside the
/// model's validity interval, angle outside the irreducible zone, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry or inconsistent dimensions during assembly.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Eigensolver failure that cannot be recovered locally.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Unreadable input or unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gyrobloch
