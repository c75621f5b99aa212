#pragma once

#include <stdexcept>
#include <string>

namespace elc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryMismatch : public Error {
 public:
  using Error::Error;
};

class UnsupportedGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Solver failures.
class NonCoercive : public Error {
 public:
  using Error::Error;
};

class NewtonDiverged : public Error {
 public:
  using Error::Error;
};

class PositivityLost : public Error {
 public:
  using Error::Error;
};

/// The Newton iterate collapsed onto the positivity floor: the data admit no
/// positive solution (for instance f = b = 0, U + L W = 0).
class DegenerateData : public PositivityLost {
 public:
  using PositivityLost::PositivityLost;
};

class OuterDiverged : public Error {
 public:
  using Error::Error;
};

class QuadratureBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace elc
