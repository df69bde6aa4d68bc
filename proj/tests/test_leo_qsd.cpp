#include <gtest/gtest.h>

#include "jcctl/leo_qsd.hpp"
#include "oracles.hpp"

namespace {

using namespace jcctl;

DensityState plus_state(int n_max = 1) { return DensityState::pure(protected_plus_state(n_max)); }

LeoOptions short_run(double T = 1.0) {
  LeoOptions o;
  o.T = T;
  o.dt = 1e-4;
  o.stride = 10;
  return o;
}

TEST(ODerivative, BoundarySourceOnly) {
  const JCParams p;
  for (double c : {0.0, 100.0, -3.0}) {
    const auto d = o_operator_derivative({}, p, c);
    EXPECT_EQ(d.F1, Complex(0.0));
    EXPECT_NEAR(std::abs(d.F2 - Complex(p.lambda * p.gamma / 2.0)), 0.0, 1e-16);
  }
}

TEST(ODerivative, ClosedSystem) {
  JCParams p;
  p.lambda = 0.0;
  const auto d = o_operator_derivative({}, p, 100.0);
  EXPECT_EQ(d.F1, Complex(0.0));
  EXPECT_EQ(d.F2, Complex(0.0));
}

TEST(PropagateLeo, ClosedSystemIsUnitary) {
  JCParams p;
  p.lambda = 0.0;
  const auto spec = PulseSpec::square(100.0, 0.1);
  const auto pulse = PulseRealization::ideal(spec);
  const auto traj = propagate_leo(plus_state(), p, pulse, short_run(0.5));

  // exact propagator: piecewise constant H_s + c R over half periods
  const ComplexMatrix Hs = build_system_hamiltonian(p);
  const ComplexMatrix R = build_leo_operator(p.n_max);
  ComplexMatrix rho = plus_state().matrix();
  const double half = 0.05;
  std::size_t k = 0;
  for (int seg = 0; seg < 10; ++seg) {
    const double c = pulse.value((seg + 0.5) * half);
    rho = oracle::unitary_evolve(Hs + c * R, rho, half);
    k += 50;  // 500 steps per half period over stride 10
    EXPECT_LT((traj.states[k].matrix() - rho).cwiseAbs().maxCoeff(), 1e-9) << "segment " << seg;
  }
}

TEST(PropagateLeo, DarkStateIsStationary) {
  const JCParams p;
  const auto g0 = DensityState::pure(basis_ket(Atom::ground, 0, p.n_max));
  const auto traj =
      propagate_leo(g0, p, PulseRealization::ideal(PulseSpec::square(100.0, 0.1)), short_run());
  for (const auto& s : traj.states) {
    EXPECT_LT((s.matrix() - g0.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PropagateLeo, ZeroAmplitudeEqualsNoPulseBitForBit) {
  const JCParams p;
  const auto a = propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec{}), short_run());
  const auto b = propagate_leo(plus_state(), p,
                               PulseRealization::ideal(PulseSpec::square(0.0, 0.1)), short_run());
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    EXPECT_TRUE(a.states[k].matrix() == b.states[k].matrix()) << k;
    EXPECT_EQ(a.o_states[k].F2, b.o_states[k].F2);
  }
}

TEST(PropagateLeo, InvariantsHoldAtEverySample) {
  const JCParams p;
  auto opt = short_run(10.0);
  const auto traj =
      propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec::square(100.0, 0.1)), opt);
  for (const auto& s : traj.states) {
    EXPECT_FALSE(density_violation(s.matrix(), Tolerances{}).has_value());
  }
}

TEST(PropagateLeo, StepHalvingConvergence) {
  const JCParams p;
  const ComplexVector phi = protected_plus_state(p.n_max);
  const auto pulse = PulseRealization::ideal(PulseSpec::square(100.0, 0.1));
  auto coarse = short_run(10.0);
  coarse.stride = 100000;
  coarse.ideal_reference = phi;
  auto fine = coarse;
  fine.dt = 5e-5;
  fine.stride = 200000;
  const auto a = propagate_leo(plus_state(), p, pulse, coarse);
  const auto b = propagate_leo(plus_state(), p, pulse, fine);
  EXPECT_LT(std::abs(a.fidelity.back() - b.fidelity.back()), 1e-8);
}

// Total increase of <sigma+ sigma- + a^dag a> over a run. The bath memory
// returns some excitation, so this is small but nonzero.
double excitation_backflow(double gamma, double dt) {
  JCParams p;
  p.gamma = gamma;
  const ComplexMatrix N = excitation_number(p.n_max);
  LeoOptions opt = short_run(10.0);
  opt.dt = dt;
  opt.stride = static_cast<std::size_t>(std::llround(1e-3 / dt));
  const auto traj = propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec{}), opt);
  double prev = 1.0, rise = 0.0;
  for (const auto& s : traj.states) {
    const double n = std::real((N * s.matrix()).trace());
    EXPECT_LE(n, 0.5 + 1e-12);
    rise += std::max(0.0, n - prev);
    prev = n;
  }
  EXPECT_LT(prev, 0.5);
  return rise;
}

TEST(PropagateLeo, ExcitationNumberDecaysTowardMarkovLimit) {
  const double slow = excitation_backflow(0.4, 1e-4);
  const double fast = excitation_backflow(50.0, 1e-4);
  // step-size independent, so the backflow is dynamics and not integration error
  EXPECT_NEAR(excitation_backflow(0.4, 5e-5), slow, 1e-9);
  EXPECT_LT(fast, 1e-3 * slow);
  EXPECT_LT(fast, 1e-6);
}

TEST(PropagateLeo, ShortTimeF2) {
  const JCParams p;
  auto opt = short_run(1e-3);
  opt.stride = 1;
  const auto traj = propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec{}), opt);
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const Complex want = p.lambda * p.gamma * t / 2.0;
    EXPECT_LT(std::abs(traj.o_states[k].F2 - want), 1e-3 * std::abs(want));
  }
}

TEST(PropagateLeo, MisalignedStepRejected) {
  const JCParams p;
  auto opt = short_run(0.3);
  opt.dt = 3e-4;
  EXPECT_THROW(propagate_leo(plus_state(), p,
                             PulseRealization::ideal(PulseSpec::square(100.0, 0.1)), opt),
               ValidationError);
}

TEST(FidelityVsIdeal, DecoupledClosedSystemIsOne) {
  JCParams p;
  p.lambda = 0.0;
  p.kappa = 0.0;
  auto opt = short_run(2.0);
  opt.ideal_reference = protected_plus_state(p.n_max);
  const auto traj = propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec{}), opt);
  EXPECT_NEAR(traj.fidelity.front(), 1.0, 1e-15);
  for (double f : traj.fidelity) EXPECT_NEAR(f, 1.0, 1e-9);
}

TEST(NoisyEnsemble, ZeroJitterBandsCollapse) {
  const JCParams p;
  auto opt = short_run(0.5);
  const auto spec = PulseSpec::square(100.0, 0.1);
  const auto bands =
      run_noisy_ensemble(spec, p, plus_state(), protected_plus_state(p.n_max), 3, opt);
  opt.ideal_reference = protected_plus_state(p.n_max);
  const auto ideal = propagate_leo(plus_state(), p, PulseRealization::ideal(spec), opt);
  for (std::size_t k = 0; k < bands.times.size(); ++k) {
    EXPECT_EQ(bands.min[k], bands.max[k]);
    EXPECT_NEAR(bands.mean[k], ideal.fidelity[k], 1e-15);
    EXPECT_EQ(bands.min[k], ideal.fidelity[k]);
  }
}

TEST(NoisyEnsemble, SingleRunAndDeterminism) {
  const JCParams p;
  auto spec = PulseSpec::square(100.0, 0.1);
  spec.jitter_fraction = 0.05;
  spec.seed = 17;
  const auto opt = short_run(0.5);
  const auto phi = protected_plus_state(p.n_max);
  const auto one = run_noisy_ensemble(spec, p, plus_state(), phi, 1, opt);
  for (std::size_t k = 0; k < one.times.size(); ++k) {
    EXPECT_EQ(one.mean[k], one.min[k]);
    EXPECT_EQ(one.min[k], one.max[k]);
  }
  const auto a = run_noisy_ensemble(spec, p, plus_state(), phi, 4, opt, 1);
  const auto b = run_noisy_ensemble(spec, p, plus_state(), phi, 4, opt, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.min, b.min);
  EXPECT_EQ(a.max, b.max);
}

TEST(ONorms, ClosedSystemAndInitialValue) {
  JCParams p;
  const auto traj =
      propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec{}), short_run(0.2));
  const auto n = o_norm_series(traj);
  EXPECT_EQ(n.abs_F1.front(), 0.0);
  EXPECT_EQ(n.abs_F2.front(), 0.0);
  p.lambda = 0.0;
  const auto closed =
      propagate_leo(plus_state(), p, PulseRealization::ideal(PulseSpec{}), short_run(0.2));
  for (double x : o_norm_series(closed).abs_F2) EXPECT_EQ(x, 0.0);
  for (double x : o_norm_series(closed).abs_F1) EXPECT_EQ(x, 0.0);
}

}  // namespace
