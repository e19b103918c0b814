#pragma once

#include <stdexcept>
#include <string>

namespace rsds {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, shape mismatches, points off the manifold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failures during evaluation or training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CutLocusError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InjectivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ChartOverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rsds
