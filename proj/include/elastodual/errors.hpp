#pragma once

#include <stdexcept>
#include <string>

namespace elastodual {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Raised by the tridiagonal and sparse solvers when a pivot falls below the
/// singularity threshold.
class SingularHessian : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class SingularKKTMatrix : public Error {
 public:
  using Error::Error;
};

class SingularHooke : public Error {
 public:
  using Error::Error;
};

/// v2 + z + K left the positivity domain of the conjugate. Carries the
/// offending element (or quadrature point) and the margin found there.
class PositivityViolated : public Error {
 public:
  PositivityViolated(std::size_t index, double margin)
      : Error("positivity violated at index " + std::to_string(index) +
              " (margin " + std::to_string(margin) + ")"),
        index_(index),
        margin_(margin) {}

  std::size_t index() const noexcept { return index_; }
  double margin() const noexcept { return margin_; }

 private:
  std::size_t index_;
  double margin_;
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(double min_eigenvalue)
      : Error("matrix not positive definite (min eigenvalue " +
              std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class ConditionViolated : public Error {
 public:
  using Error::Error;
};

class ConstraintViolated : public Error {
 public:
  using Error::Error;
};

}  // namespace elastodual
