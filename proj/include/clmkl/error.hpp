#pragma once

#include <stdexcept>
#include <string>

namespace clmkl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Operand shapes (n, l, M) disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A file did not match the expected on-disk format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed at the OS level.
class IoError : public Error {
 public:
  using Error::Error;
};

/// The inner QP solver hit its iteration cap or met invalid data.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace clmkl
