#pragma once

#include <stdexcept>
#include <string>

namespace cdrfe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates the documented precondition of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear system could not be solved (e.g. unloaded rank-deficient covariance).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration / manifest / file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure reading or writing audio and matrix files.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline void require_dims(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace detail
}  // namespace cdrfe
