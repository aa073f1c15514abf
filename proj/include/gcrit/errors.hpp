#pragma once

#include <stdexcept>
#include <string>

namespace gcrit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model or argument is outside its admissible range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A required radial spectral moment is infinite.
class MomentDivergence : public Error {
 public:
  using Error::Error;
};

/// A derivative of order higher than supported was requested.
class OrderTooHigh : public Error {
 public:
  using Error::Error;
};

/// Derivative triple violates eta0 < 0 < mu0, nu0 < 0.
class SignViolation : public Error {
 public:
  using Error::Error;
};

/// The pair has no finite-constant rho^4 asymptotic; only its order is known.
class UnsupportedPair : public Error {
 public:
  using Error::Error;
};

/// Base for numerical degeneracies (singular covariances, flat Hessians).
class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

class DegenerateHessian : public NumericalDegeneracy {
 public:
  using NumericalDegeneracy::NumericalDegeneracy;
};

class DegenerateCovariance : public NumericalDegeneracy {
 public:
  DegenerateCovariance(const std::string& what, double smallest_eigenvalue)
      : NumericalDegeneracy(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

class NonPositiveEstimate : public Error {
 public:
  using Error::Error;
};

}  // namespace gcrit
