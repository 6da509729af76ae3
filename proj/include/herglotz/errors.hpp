#ifndef HERGLOTZ_ERRORS_HPP
#define HERGLOTZ_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace herglotz {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid caller input: bad dimensions, malformed configuration, unknown names.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Expression syntax error. `position()` is the byte offset into the source text.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : Error(msg + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Domain error while evaluating an expression (log of a non-positive value,
/// division by zero, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its contract, e.g. a z-dependent function
/// was passed to a Poisson bracket.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure while estimating derivatives.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be regular is singular or near-singular.
class RegularityError : public Error {
 public:
  using Error::Error;
};

/// Iteration did not converge; carries the residual of the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double last_residual)
      : Error(msg + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// The adaptive integrator was forced below its minimum step size.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// The state left the finite range during integration. `time()` is the time
/// of the last good sample.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, double time)
      : Error(msg + " (last good state at t=" + std::to_string(time) + ")"),
        time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace herglotz

#endif  // HERGLOTZ_ERRORS_HPP
