#pragma once

#include <stdexcept>
#include <string>

namespace rsmmf {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimensions, non-finite values, unknown names.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A closed-form construction was requested outside the antenna regime it covers.
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// A rate split or power allocation breaks a model constraint.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

/// The instance has no signal to work with (e.g. zero receive power everywhere).
class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

/// The convex subproblem solver did not certify a solution.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}
}  // namespace detail

}  // namespace rsmmf
