#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mkmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or index sets that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix argument outside the required domain (typically not positive definite).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A view whose visible block is not positive definite, so it cannot be completed.
class VisibleBlockNotPositiveDefinite : public DomainError {
 public:
  VisibleBlockNotPositiveDefinite(const std::string& what, std::size_t view)
      : DomainError(what), view_(view) {}
  std::size_t view() const { return view_; }

 private:
  std::size_t view_;
};

/// A factorization or eigensolver failed to produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed arguments or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace mkmc
