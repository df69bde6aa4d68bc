#include <random>

#include <gtest/gtest.h>

#include "jcctl/lindblad.hpp"
#include "oracles.hpp"

namespace {

using namespace jcctl;

TEST(LindbladDerivative, QubitDecay) {
  LindbladModel m;
  m.H = ComplexMatrix::Zero(2, 2);
  ComplexMatrix lower = ComplexMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;  // |g><e| in (g, e) order
  m.lindblads = {lower};
  ComplexMatrix e = ComplexMatrix::Zero(2, 2);
  e(1, 1) = 1.0;
  ComplexMatrix want = ComplexMatrix::Zero(2, 2);
  want(0, 0) = 1.0;
  want(1, 1) = -1.0;
  EXPECT_LT((lindblad_derivative(e, m) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LindbladDerivative, MatchesIndexSumsAndIsTraceless) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    LindbladModel m;
    m.H = oracle::random_hermitian(gen, 4);
    m.lindblads = {oracle::random_matrix(gen, 4), oracle::random_matrix(gen, 4)};
    const ComplexMatrix rho = oracle::random_density(gen, 4);
    const ComplexMatrix d = lindblad_derivative(rho, m);
    EXPECT_LT((d - oracle::lindblad_index_sum(rho, m.H, m.lindblads)).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_LT(std::abs(d.trace()), 1e-12);
    EXPECT_LT(hermitian_deviation(d), 1e-12);
    const ComplexVector v = lindblad_superoperator(m) * rho.reshaped();
    EXPECT_LT((v - d.reshaped()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ForwardPropagate, UnitaryWithoutDissipators) {
  std::mt19937_64 gen(21);
  LindbladModel m;
  m.H = oracle::random_hermitian(gen, 4);
  ComplexVector psi(4);
  psi << 0.5, Complex(0.0, 0.5), -0.5, 0.5;
  const auto rho0 = DensityState::pure(psi);
  const auto fwd = forward_propagate(rho0, m, 1.0, 1e-3);
  ASSERT_EQ(fwd.steps(), 1000u);
  for (std::size_t i = 0; i <= fwd.steps(); i += 50) {
    const auto s = fwd.state(i);
    EXPECT_NEAR(s.purity(), 1.0, 1e-10);
    EXPECT_LT((s.matrix() - oracle::unitary_evolve(m.H, rho0.matrix(), fwd.time(i)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
  }
}

TEST(ForwardPropagate, CavityLossKeepsStateInvariants) {
  JCParams p;
  p.kappa = 0.6;
  p.lambda = 0.75;
  const auto m = jc_lindblad_model(p);
  ComplexVector psi = ComplexVector::Zero(4);
  psi(basis_index(Atom::ground, 0, 1)) = 1.0;
  psi(basis_index(Atom::excited, 0, 1)) = 1.0;
  const auto fwd = forward_propagate(DensityState::pure(psi), m, 2.0, 1e-3);
  for (std::size_t i = 0; i <= fwd.steps(); ++i) {
    EXPECT_FALSE(density_violation(fwd.states[i], Tolerances{}).has_value());
  }
  EXPECT_THROW(forward_propagate(DensityState::pure(psi), m, 1.0, 0.3), ValidationError);
}

TEST(StateStore, SpillRoundTrip) {
  std::mt19937_64 gen(4);
  StateStore mem(1000);
  StateStore disk(3);
  std::vector<ComplexMatrix> ref;
  for (int i = 0; i < 10; ++i) {
    ComplexMatrix m = oracle::random_density(gen, 4);
    if (i == 5) m(0, 1) = 1e-120;  // below the fixed-width exponent range
    ref.push_back(m);
    mem.push_back(m);
    disk.push_back(m);
  }
  EXPECT_FALSE(mem.spilled());
  EXPECT_TRUE(disk.spilled());
  for (int i = 9; i >= 0; --i) {
    EXPECT_EQ(mem[i], ref[i]);
    EXPECT_LT((disk[i] - ref[i]).cwiseAbs().maxCoeff(), 1e-99);
  }
  EXPECT_EQ(disk[3], ref[3]);  // %.17e round-trips doubles exactly
  EXPECT_THROW(disk[10], std::out_of_range);
}

TEST(StateStore, SpilledTrajectoryMatchesInMemory) {
  JCParams p;
  p.kappa = 0.6;
  p.lambda = 0.75;
  const auto m = jc_lindblad_model(p);
  const auto rho0 = DensityState::pure(basis_ket(Atom::excited, 0, 1));
  ForwardOptions spill;
  spill.spill_threshold = 10;
  const auto a = forward_propagate(rho0, m, 0.5, 1e-3);
  const auto b = forward_propagate(rho0, m, 0.5, 1e-3, spill);
  EXPECT_TRUE(b.states.spilled());
  for (std::size_t i = 0; i <= a.steps(); i += 37) EXPECT_EQ(a.states[i], b.states[i]);
}

}  // namespace
