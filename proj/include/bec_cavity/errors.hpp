#ifndef BEC_CAVITY_ERRORS_HPP
#define BEC_CAVITY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bec_cavity {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A parameter or configuration value violates its invariants.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// An iterative solver stopped before reaching its tolerances.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, long iterations, double phi_step, double alpha_step)
      : Error(what), iterations_(iterations), phi_step_(phi_step), alpha_step_(alpha_step) {}

  long iterations() const noexcept { return iterations_; }
  double phi_step() const noexcept { return phi_step_; }
  double alpha_step() const noexcept { return alpha_step_; }

private:
  long iterations_;
  double phi_step_;
  double alpha_step_;
};

/// Eigenvector basis too ill-conditioned to build a trustworthy biorthogonal system.
class SingularBasisError : public Error {
public:
  SingularBasisError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

/// An operation was asked for a quantity that does not exist for the given state
/// (e.g. a steady state of an unstable mean field).
class RefusedError : public Error {
public:
  using Error::Error;
};

} // namespace bec_cavity

#endif // BEC_CAVITY_ERRORS_HPP
