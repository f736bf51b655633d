#pragma once

#include <stdexcept>
#include <string>

namespace qgfc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation would leave the representable or configured range
/// (factorial overflow, Fock-basis cap, truncation deficit too large).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Not enough data to form the requested estimate.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// Comb fit could not be formed from the supplied peaks.
class FitError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qgfc
