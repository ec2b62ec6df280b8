#pragma once

#include <stdexcept>
#include <string>

namespace sgrc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad level, dimension mismatch, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A requested object would exceed a configured size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A design column has no simulation draw inside its support.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgrc
