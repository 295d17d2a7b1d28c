#ifndef FCHC_ERRORS_HPP
#define FCHC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fchc {

/// Base class of every toolkit error. Catch this to map failures to exit codes.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration family: malformed input files.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Configuration family: well-formed input violating a model assumption.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Solver family.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Vector/grid dimensions do not match the operator or basis.
class ShapeMismatch : public SolverError {
public:
  using SolverError::SolverError;
};

/// Inverting a fractional power with a zero first eigenvalue requires a
/// zero-mean right-hand side.
class NonZeroMeanRhs : public SolverError {
public:
  using SolverError::SolverError;
};

/// A field became identically zero where a nonzero one is required.
class ZeroField : public SolverError {
public:
  using SolverError::SolverError;
};

/// A potential was evaluated (or a trajectory escaped) outside its admitted
/// interval. Carries the offending value and flat grid/time location.
class DomainViolation : public SolverError {
public:
  DomainViolation(const std::string& what, double value, long location)
      : SolverError(what), value_(value), location_(location) {}
  double value() const { return value_; }
  long location() const { return location_; }

private:
  double value_;
  long location_;
};

class NewtonDivergence : public SolverError {
public:
  using SolverError::SolverError;
};

/// A per-step linear system is numerically singular.
class SingularStep : public SolverError {
public:
  using SolverError::SolverError;
};

/// A pairing was requested between incompatible discretization schemes.
class SchemeMismatch : public SolverError {
public:
  using SolverError::SolverError;
};

/// Stability probe got two controls whose difference underflows.
class IdenticalControls : public SolverError {
public:
  using SolverError::SolverError;
};

/// An iterative projection did not settle within its iteration cap.
class NoConvergence : public SolverError {
public:
  using SolverError::SolverError;
};

class LineSearchFailure : public SolverError {
public:
  using SolverError::SolverError;
};

}  // namespace fchc

#endif
