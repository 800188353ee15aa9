#pragma once

#include <stdexcept>
#include <string>

namespace uoivar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed VAR parameters or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Not enough rows for the requested lag, difference order or block length.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be used (non-finite cells, degenerate columns, parse failures).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (Cholesky, non-convergence that cannot be recovered).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The design matrix of a least-squares problem is rank deficient.
class SingularDesign : public NumericalError {
 public:
  SingularDesign(const std::string& what, double condition_estimate)
      : NumericalError(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace uoivar
