#include <gtest/gtest.h>

#include "jcctl/jc_model.hpp"

namespace {

using namespace jcctl;

TEST(Annihilation, SmallCases) {
  ComplexMatrix want(2, 2);
  want << 0.0, 1.0, 0.0, 0.0;
  EXPECT_EQ(build_annihilation(1), want);
  EXPECT_NEAR(build_annihilation(2)(1, 2).real(), std::sqrt(2.0), 1e-15);
  const ComplexMatrix a = build_annihilation(4);
  const ComplexMatrix n = a.adjoint() * a;
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(n(k, k).real(), k, 1e-14);
  EXPECT_LT((n - ComplexMatrix(n.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(build_annihilation(0), ValidationError);
}

TEST(SystemHamiltonian, DecoupledIsDiagonal) {
  JCParams p;
  p.kappa = 0.0;
  p.omega = 1.3;
  p.omega_c = 0.7;
  p.n_max = 3;
  const ComplexMatrix h = build_system_hamiltonian(p);
  for (int atom = 0; atom < 2; ++atom) {
    for (int n = 0; n <= p.n_max; ++n) {
      const auto i = basis_index(static_cast<Atom>(atom), n, p.n_max);
      EXPECT_NEAR(h(i, i).real(), (atom ? 0.5 : -0.5) * p.omega + p.omega_c * n, 1e-15);
    }
  }
  EXPECT_LT((h - ComplexMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SystemHamiltonian, DefaultCoupling) {
  const JCParams p;
  const ComplexMatrix h = build_system_hamiltonian(p);
  const auto g1 = basis_index(Atom::ground, 1, 1), e0 = basis_index(Atom::excited, 0, 1);
  EXPECT_NEAR(std::abs(h(g1, e0) - Complex(0.7)), 0.0, 1e-15);
  EXPECT_LT(hermitian_deviation(h), 1e-15);
}

TEST(SystemHamiltonian, ConservesExcitationNumber) {
  for (int n_max : {1, 2, 4}) {
    JCParams p;
    p.n_max = n_max;
    p.omega = 1.1;
    p.kappa = 0.37;
    const ComplexMatrix h = build_system_hamiltonian(p);
    const ComplexMatrix n = excitation_number(n_max);
    EXPECT_LT((h * n - n * h).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lindblad, ActionOnBasis) {
  JCParams p;
  const ComplexMatrix L = build_lindblad(p);
  EXPECT_LT((L * basis_ket(Atom::ground, 0, 1)).norm(), 1e-15);
  EXPECT_LT((L * basis_ket(Atom::ground, 1, 1) - p.lambda * basis_ket(Atom::ground, 0, 1)).norm(),
            1e-15);
  p.lambda = 0.0;
  EXPECT_EQ(build_lindblad(p).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LeoOperator, DiagonalSignsAndAlgebra) {
  const ComplexMatrix R = build_leo_operator(1);
  // index order g0, g1, e0, e1
  EXPECT_EQ(R(basis_index(Atom::ground, 0, 1), basis_index(Atom::ground, 0, 1)), Complex(1.0));
  EXPECT_EQ(R(basis_index(Atom::excited, 0, 1), basis_index(Atom::excited, 0, 1)), Complex(1.0));
  EXPECT_EQ(R(basis_index(Atom::ground, 1, 1), basis_index(Atom::ground, 1, 1)), Complex(-1.0));
  EXPECT_EQ(R(basis_index(Atom::excited, 1, 1), basis_index(Atom::excited, 1, 1)), Complex(-1.0));
  EXPECT_LT((R * R - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
  const ComplexMatrix P = protected_projector(1);
  EXPECT_LT((R * P - P * R).cwiseAbs().maxCoeff(), 1e-15);
  const JCParams p;
  const ComplexMatrix hp = protected_hamiltonian(p);
  EXPECT_LT((R * hp - hp * R).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Params, Validation) {
  JCParams p;
  EXPECT_NO_THROW(p.validate());
  p.gamma = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = JCParams{};
  p.n_max = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = JCParams{};
  p.kappa = std::numeric_limits<double>::infinity();
  EXPECT_THROW(p.validate(), ValidationError);
}

}  // namespace
