#ifndef GRIDFN_ERRORS_HPP
#define GRIDFN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gridfn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Window or box not aligned to the grid step.
struct AlignmentError : Error {
  using Error::Error;
};

// discretize() produced no points.
struct EmptyDomainError : Error {
  using Error::Error;
};

// Non-finite value met while sampling or integrating a function.
struct SamplingError : Error {
  using Error::Error;
};

// Two grid functions live on different levels or dimensions.
struct LevelMismatchError : Error {
  using Error::Error;
};

// A test-function support or a measure window does not fit the grid.
struct WindowError : Error {
  using Error::Error;
};

// periodic_measure: the scan found a period violation.
struct PeriodicityError : Error {
  using Error::Error;
};

// Linear solve failed (singular factorization or no convergence).
struct SolveError : Error {
  SolveError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual = 0.0;
};

}  // namespace gridfn

#endif
