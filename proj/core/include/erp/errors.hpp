#pragma once

#include <stdexcept>
#include <string>

namespace erp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model or solver parameters (negative volatility, bad strike ordering, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The requested coverage cannot be reached by an admissible uncertainty budget.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed: an inner hedging problem is unbounded below,
/// a bracket is invalid, or a post-condition of the solver does not hold.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The inner minimax problem at a lattice node has no finite minimum. This
/// means the risk measure lets the hedger reach arbitrarily low risk there.
class UnboundedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace erp
