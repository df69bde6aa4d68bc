#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jcctl {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Bad input: malformed parameters, invalid states, inconsistent configuration.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A propagation left the admissible state set. Carries the time at which it
/// was detected so callers can report it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"),
        time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Numerical acceptance thresholds for density states and spectral routines.
/// Every routine that validates takes one of these; the defaults are the
/// library-wide ones.
struct Tolerances {
  double hermitian = 1e-12;        // max |M_ij - conj(M_ji)| for states
  double hermitian_input = 1e-10;  // eigen-solver input check
  double trace = 1e-9;             // |tr(rho) - 1|
  double min_eigenvalue = -1e-9;   // smallest admissible eigenvalue
};

}  // namespace jcctl
