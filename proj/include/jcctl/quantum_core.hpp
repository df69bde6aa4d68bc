#pragma once

// Dense complex linear algebra and state metrics at small dimension.
//
// Basis convention used throughout the library: atom (x) cavity, with
// index = atom * (n_max + 1) + photons, atom 0 = |g>, atom 1 = |e>.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "jcctl/types.hpp"

namespace jcctl {

/// Largest entry-wise deviation from Hermiticity.
inline double hermitian_deviation(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues, unitary
/// eigenvector columns, each column phased so that its first nonzero
/// component is real and positive.
struct SpectralDecomposition {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }

  ComplexMatrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
           eigenvectors.adjoint();
  }

  /// V f(Lambda) V^dagger for a real scalar function of the eigenvalues.
  template <class Fn>
  ComplexMatrix apply(Fn&& fn) const {
    ComplexVector d(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) d(i) = fn(eigenvalues(i));
    return eigenvectors * d.asDiagonal() * eigenvectors.adjoint();
  }
};

inline SpectralDecomposition hermitian_eig(const ComplexMatrix& m,
                                           double hermitian_tol = 1e-10) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ValidationError("hermitian_eig: matrix must be square and non-empty");
  }
  if (!m.allFinite()) throw ValidationError("hermitian_eig: non-finite entries");
  const double dev = hermitian_deviation(m);
  if (dev > hermitian_tol) {
    std::ostringstream os;
    os << "hermitian_eig: input not Hermitian (deviation " << dev << ")";
    throw ValidationError(os.str());
  }
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("hermitian_eig: eigen-solver did not converge");
  }
  SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < out.dim(); ++c) {
    auto col = out.eigenvectors.col(c);
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      const double mag = std::abs(col(r));
      if (mag > 1e-12) {
        col *= std::conj(col(r)) / mag;
        col(r) = Complex(std::real(col(r)), 0.0);
        break;
      }
    }
  }
  return out;
}

namespace detail {

inline void check_psd(const SpectralDecomposition& eig, double negative_tol,
                      const char* who) {
  if (eig.eigenvalues(0) < -negative_tol) {
    std::ostringstream os;
    os << who << ": matrix not positive semidefinite (eigenvalue "
       << eig.eigenvalues(0) << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace detail

/// Principal square root of a PSD matrix. Eigenvalues in [-negative_tol, 0)
/// are treated as zero.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& m, double negative_tol = 1e-9) {
  const auto eig = hermitian_eig(m);
  detail::check_psd(eig, negative_tol, "psd_sqrt");
  return eig.apply([](double x) { return Complex(std::sqrt(std::max(x, 0.0))); });
}

/// Support pseudo-inverse square root: eigenvalues >= cutoff map to x^{-1/2},
/// everything below the cutoff maps to zero.
inline ComplexMatrix pinv_sqrt(const ComplexMatrix& m, double cutoff,
                               double negative_tol = 1e-9) {
  const auto eig = hermitian_eig(m);
  detail::check_psd(eig, negative_tol, "pinv_sqrt");
  return eig.apply([cutoff](double x) {
    return x >= cutoff && x > 0.0 ? Complex(1.0 / std::sqrt(x)) : Complex(0.0);
  });
}

/// Why a matrix is not an admissible density state, or nullopt if it is.
inline std::optional<std::string> density_violation(const ComplexMatrix& m,
                                                    const Tolerances& tol = {}) {
  std::ostringstream os;
  if (m.rows() != m.cols() || m.rows() == 0) return "matrix is not square";
  if (!m.allFinite()) return "non-finite entries";
  const double herm = hermitian_deviation(m);
  if (herm > tol.hermitian) {
    os << "Hermiticity deviation " << herm << " exceeds " << tol.hermitian;
    return os.str();
  }
  const double tr_err = std::abs(m.trace() - Complex(1.0));
  if (tr_err > tol.trace) {
    os << "trace deviation " << tr_err << " exceeds " << tol.trace;
    return os.str();
  }
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<ComplexMatrix>(sym, Eigen::EigenvaluesOnly)
          .eigenvalues()(0);
  if (min_eig < tol.min_eigenvalue) {
    os << "minimum eigenvalue " << min_eig << " below " << tol.min_eigenvalue;
    return os.str();
  }
  return std::nullopt;
}

/// Hermitian, unit-trace, positive semidefinite matrix. Construction validates.
class DensityState {
 public:
  explicit DensityState(ComplexMatrix m, const Tolerances& tol = {})
      : m_(std::move(m)) {
    if (auto why = density_violation(m_, tol)) {
      throw ValidationError("invalid density state: " + *why);
    }
  }

  static DensityState pure(const ComplexVector& psi) {
    const double n = psi.norm();
    if (!(n > 0.0)) throw ValidationError("pure state: zero vector");
    const ComplexVector u = psi / n;
    return DensityState(u * u.adjoint());
  }

  /// Wraps a matrix the caller has already validated.
  static DensityState trusted(ComplexMatrix m) { return DensityState(std::move(m), Trusted{}); }

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  double purity() const { return std::real((m_ * m_).trace()); }

 private:
  struct Trusted {};
  DensityState(ComplexMatrix m, Trusted) : m_(std::move(m)) {}

  ComplexMatrix m_;
};

/// Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2, evaluated as the
/// squared trace norm of sqrt(rho) sqrt(sigma) for accuracy near pure states.
inline double fidelity(const DensityState& rho, const DensityState& sigma) {
  if (rho.dim() != sigma.dim()) throw ValidationError("fidelity: dimension mismatch");
  const ComplexMatrix prod = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
  Eigen::JacobiSVD<ComplexMatrix> svd(prod);
  const double s = svd.singularValues().sum();
  return std::clamp(s * s, 0.0, 1.0);
}

/// <psi|rho|psi> for normalized psi.
inline double fidelity_pure(const DensityState& rho, const ComplexVector& psi) {
  if (rho.dim() != psi.size()) throw ValidationError("fidelity: dimension mismatch");
  return std::clamp(std::real(psi.dot(rho.matrix() * psi)) / psi.squaredNorm(), 0.0, 1.0);
}

inline double trace_distance(const DensityState& rho, const DensityState& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw ValidationError("trace_distance: dimension mismatch");
  }
  const ComplexMatrix diff = rho.matrix() - sigma.matrix();
  const RealVector ev = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(
                            0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly)
                            .eigenvalues();
  return std::clamp(0.5 * ev.cwiseAbs().sum(), 0.0, 1.0);
}

/// Reduce a state on atom (x) cavity to the atom. Cavity dimension is dim / 2.
inline ComplexMatrix partial_trace_cavity(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 4 || rho.rows() % 2 != 0) {
    throw ValidationError("partial_trace_cavity: expected a 2*(n_max+1) square matrix");
  }
  const Eigen::Index nc = rho.rows() / 2;
  ComplexMatrix out = ComplexMatrix::Zero(2, 2);
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b = 0; b < 2; ++b) out(a, b) = rho.block(a * nc, b * nc, nc, nc).trace();
  return out;
}

inline DensityState partial_trace_cavity(const DensityState& rho) {
  return DensityState::trusted(partial_trace_cavity(rho.matrix()));
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace jcctl
