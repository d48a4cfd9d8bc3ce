#pragma once

#include <stdexcept>
#include <string>

namespace nullcone {

/// Input failed a structural or algebraic precondition (bad spec file,
/// non-self-adjoint algebra, bracket-closure failure, ...).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine hit its cap without reaching tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual(residual) {}
  double residual;
};

/// A combinatorial enumeration exceeded its configured cap.
class CapExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of the operation (e.g. the
/// moment map at v = 0, a destabilizer of a closed orbit).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace nullcone
