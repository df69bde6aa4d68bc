#pragma once

// Operators of the dissipative Jaynes-Cummings model and the LEO generator.

#include <cmath>
#include <sstream>

#include "jcctl/quantum_core.hpp"

namespace jcctl {

enum class Atom : int { ground = 0, excited = 1 };

struct JCParams {
  double omega = 1.0;    // atom frequency
  double omega_c = 1.0;  // cavity frequency
  double kappa = 0.7;    // atom-cavity coupling
  double lambda = 0.6;   // system-bath coupling, L = lambda * a
  double gamma = 0.4;    // bath memory rate
  double omega0 = 0.0;   // bath central frequency shift
  int n_max = 1;         // cavity truncation

  Eigen::Index cavity_dim() const { return n_max + 1; }
  Eigen::Index dim() const { return 2 * cavity_dim(); }
  Complex gamma_eff() const { return {gamma, omega0}; }

  void validate() const {
    std::ostringstream os;
    const double all[] = {omega, omega_c, kappa, lambda, gamma, omega0};
    for (double v : all) {
      if (!std::isfinite(v)) throw ValidationError("JCParams: non-finite parameter");
    }
    if (!(gamma > 0.0)) {
      os << "JCParams: gamma must be > 0 (got " << gamma << ")";
      throw ValidationError(os.str());
    }
    if (n_max < 1) {
      os << "JCParams: n_max must be >= 1 (got " << n_max << ")";
      throw ValidationError(os.str());
    }
  }
};

inline Eigen::Index basis_index(Atom atom, int photons, int n_max) {
  return static_cast<Eigen::Index>(atom) * (n_max + 1) + photons;
}

inline ComplexVector basis_ket(Atom atom, int photons, int n_max) {
  ComplexVector v = ComplexVector::Zero(2 * (n_max + 1));
  v(basis_index(atom, photons, n_max)) = 1.0;
  return v;
}

/// Cavity-space annihilation operator: <n-1|a|n> = sqrt(n).
inline ComplexMatrix build_annihilation(int n_max) {
  if (n_max < 1) throw ValidationError("build_annihilation: n_max must be >= 1");
  ComplexMatrix a = ComplexMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

/// Atom lowering operator |g><e| on the atom space.
inline ComplexMatrix atom_lowering() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(static_cast<int>(Atom::ground), static_cast<int>(Atom::excited)) = 1.0;
  return s;
}

/// sigma_z with |e> = +1.
inline ComplexMatrix atom_sigma_z() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(static_cast<int>(Atom::ground), static_cast<int>(Atom::ground)) = -1.0;
  s(static_cast<int>(Atom::excited), static_cast<int>(Atom::excited)) = 1.0;
  return s;
}

/// Cavity annihilation operator on the full space (identity on the atom).
inline ComplexMatrix full_annihilation(int n_max) {
  return kron(ComplexMatrix::Identity(2, 2), build_annihilation(n_max));
}

inline ComplexMatrix full_atom_lowering(int n_max) {
  return kron(atom_lowering(), ComplexMatrix::Identity(n_max + 1, n_max + 1));
}

/// sigma+ sigma- + a^dagger a
inline ComplexMatrix excitation_number(int n_max) {
  const ComplexMatrix a = full_annihilation(n_max);
  const ComplexMatrix sm = full_atom_lowering(n_max);
  return sm.adjoint() * sm + a.adjoint() * a;
}

/// H_s = omega/2 sigma_z + kappa (sigma- a^dag + sigma+ a) + omega_c a^dag a
inline ComplexMatrix build_system_hamiltonian(const JCParams& p) {
  p.validate();
  const ComplexMatrix a = full_annihilation(p.n_max);
  const ComplexMatrix sm = full_atom_lowering(p.n_max);
  const ComplexMatrix sz =
      kron(atom_sigma_z(), ComplexMatrix::Identity(p.cavity_dim(), p.cavity_dim()));
  ComplexMatrix h = 0.5 * p.omega * sz + p.kappa * (sm * a.adjoint() + sm.adjoint() * a) +
                    p.omega_c * a.adjoint() * a;
  return 0.5 * (h + h.adjoint());
}

/// L = lambda * a
inline ComplexMatrix build_lindblad(const JCParams& p) {
  p.validate();
  return p.lambda * full_annihilation(p.n_max);
}

/// Projector onto the protected space span{|g0>, |e0>}.
inline ComplexMatrix protected_projector(int n_max) {
  const Eigen::Index d = 2 * (n_max + 1);
  ComplexMatrix proj = ComplexMatrix::Zero(d, d);
  proj(basis_index(Atom::ground, 0, n_max), basis_index(Atom::ground, 0, n_max)) = 1.0;
  proj(basis_index(Atom::excited, 0, n_max), basis_index(Atom::excited, 0, n_max)) = 1.0;
  return proj;
}

/// R = P - Q: +1 on the protected space, -1 on its complement.
inline ComplexMatrix build_leo_operator(int n_max) {
  if (n_max < 1) throw ValidationError("build_leo_operator: n_max must be >= 1");
  const ComplexMatrix proj = protected_projector(n_max);
  const Eigen::Index d = proj.rows();
  return 2.0 * proj - ComplexMatrix::Identity(d, d);
}

/// Free Hamiltonian inside the protected space, omega sigma_z / 2 on the
/// vacuum block.
inline ComplexMatrix protected_hamiltonian(const JCParams& p) {
  const ComplexMatrix proj = protected_projector(p.n_max);
  const ComplexMatrix sz =
      kron(atom_sigma_z(), ComplexMatrix::Identity(p.cavity_dim(), p.cavity_dim()));
  return 0.5 * p.omega * proj * sz * proj;
}

}  // namespace jcctl
