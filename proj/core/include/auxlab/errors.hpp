#pragma once

#include <stdexcept>
#include <string>

namespace auxlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An exponent argument exceeded the configured clamp (see exp_clamp()).
class OverflowError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Target not admissible for the criterion (e.g. non-probability vector for cross entropy).
class InvalidTarget : public Error {
 public:
  using Error::Error;
};

// Grid or feature count beyond the allowed evaluation budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class UnknownFixture : public Error {
 public:
  using Error::Error;
};

// File could not be read/written or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace auxlab
