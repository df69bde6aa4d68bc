#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "jcctl/analysis.hpp"
#include "oracles.hpp"

namespace {

using namespace jcctl;

constexpr double kPi = std::numbers::pi;

LindbladModel reversal_model() {
  JCParams p;
  p.kappa = 0.6;
  p.lambda = 0.75;
  return jc_lindblad_model(p);
}

std::vector<double> sample(double (*f)(double), double T, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<double> x(n + 1);
  for (std::size_t k = 0; k <= n; ++k) x[k] = f(static_cast<double>(k) * dt);
  return x;
}

double abs_cos(double t) { return std::abs(std::cos(t)); }
double decaying(double t) { return std::exp(-t); }

TEST(Bloch, Examples) {
  EXPECT_LT(bloch_vector(0.5 * ComplexMatrix::Identity(2, 2)).r.norm(), 1e-15);
  ComplexMatrix e = ComplexMatrix::Zero(2, 2);
  e(1, 1) = 1.0;
  EXPECT_LT((bloch_vector(e).r - Vector3(0, 0, 1)).norm(), 1e-15);
  ComplexVector plus(2);
  plus << 1.0, 1.0;
  EXPECT_LT((bloch_vector(DensityState::pure(plus)).r - Vector3(1, 0, 0)).norm(), 1e-15);
  ComplexVector y(2);
  y << 1.0, kI;  // |g> + i|e>
  EXPECT_NEAR(bloch_vector(DensityState::pure(y)).r(1), -1.0, 1e-15);
}

TEST(Bloch, AssembleRoundTrip) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix rho = oracle::random_density(gen, 2);
    EXPECT_LT((assemble(bloch_vector(rho)) - rho).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_THROW(assemble(BlochState{Vector3(1.0, 0.1, 0.0)}), ValidationError);
}

TEST(AnalyticGTest, Examples) {
  EXPECT_NEAR(std::abs(analytic_g(0.0, 0.75, 0.6) - Complex(1.0)), 0.0, 1e-15);
  for (double t : {0.5, 2.0, 9.0}) {
    EXPECT_NEAR(std::abs(analytic_g(t, 0.75, 0.0) - Complex(1.0)), 0.0, 1e-12);
  }
  const double lambda = 0.75;
  const Complex a(0.0, std::sqrt(5.44359375));
  const Complex want = std::exp(-lambda * lambda / 4.0) *
                       (lambda * lambda * std::sinh(a / 4.0) / a + std::cosh(a / 4.0));
  EXPECT_NEAR(std::abs(analytic_g(1.0, 0.75, 0.6) - want), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(analytic_g(3.0, 0.0, 0.0) - Complex(1.0)), 0.0, 1e-15);
}

TEST(AnalyticGTest, CriticalCouplingIsContinuous) {
  // a = 0 at lambda^4 = 16 kappa^2
  const double lambda = 0.8, kc = lambda * lambda / 4.0;
  for (double t : {0.3, 2.0, 7.0}) {
    const Complex at = analytic_g(t, lambda, kc);
    EXPECT_NEAR(std::abs(at - analytic_g(t, lambda, kc * (1 + 1e-9))), 0.0, 1e-7);
    EXPECT_NEAR(std::abs(at - analytic_g(t, lambda, kc * (1 - 1e-9))), 0.0, 1e-7);
  }
}

TEST(AnalyticGTest, BoundedByOne) {
  for (double lambda : {0.1, 0.75, 1.5}) {
    for (double kappa : {0.0, 0.05, 0.6, 2.0}) {
      for (double t = 0.0; t <= 20.0; t += 0.01) {
        EXPECT_LE(std::abs(analytic_g(t, lambda, kappa)), 1.0 + 1e-9);
      }
    }
  }
}

TEST(AnalyticGTest, MatchesPropagatedCoherenceAndPopulation) {
  const auto m = reversal_model();
  const auto rho0 = DensityState::pure(protected_plus_state(1));
  const auto fwd = forward_propagate(rho0, m, 3.0, 1e-3);
  const ComplexMatrix a0 = partial_trace_cavity(rho0.matrix());
  for (std::size_t i = 0; i <= fwd.steps(); i += 100) {
    const double t = fwd.time(i);
    const ComplexMatrix a = partial_trace_cavity(fwd.states[i]);
    const Complex g = analytic_g(t, 0.75, 0.6);
    EXPECT_NEAR(std::abs(a(1, 0) - g * std::exp(-kI * t) * a0(1, 0)), 0.0, 1e-4);
    EXPECT_NEAR(a(1, 1).real(), std::norm(g) * a0(1, 1).real(), 1e-4);
  }
}

TEST(TraceDistanceSeries, OptimalPair) {
  const auto d = optimal_pair_trace_distance(0.75, 0.1, 1e-2, 1000);
  EXPECT_NEAR(d.front(), 1.0, 1e-15);
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_LE(d[k], d[k - 1]);
  const auto num = optimal_pair_trace_distance_numeric(reversal_model(), 1, 2.0, 1e-3);
  const auto ana = optimal_pair_trace_distance(0.75, 0.6, 1e-3, 2000);
  ASSERT_EQ(num.size(), ana.size());
  for (std::size_t k = 0; k < num.size(); ++k) EXPECT_NEAR(num[k], ana[k], 1e-4);
}

TEST(Fisher, PureFamily) {
  for (double th : {0.1, kPi / 4.0, 1.2}) {
    const Vector3 r(std::sin(2 * th), 0.0, std::cos(2 * th));
    const Vector3 dr = 2.0 * Vector3(std::cos(2 * th), 0.0, -std::sin(2 * th));
    EXPECT_NEAR(fisher_theta(BlochState{r}, dr), 4.0, 1e-12);
  }
}

TEST(Fisher, ZeroDerivative) {
  EXPECT_EQ(fisher_theta(BlochState{Vector3(0.3, 0.1, 0.2)}, Vector3::Zero()), 0.0);
}

TEST(Fisher, MixedStateMatchesSld) {
  const Vector3 r(0.3, 0.0, 0.2), dr(0.1, 0.0, -0.4);
  EXPECT_NEAR(fisher_theta(BlochState{r}, dr), oracle::fisher_sld(r, dr), 1e-12);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector3 rr(u(gen), u(gen), u(gen));
    rr *= 0.99 * std::abs(u(gen)) / rr.norm();
    const Vector3 dd(u(gen), u(gen), u(gen));
    EXPECT_NEAR(fisher_theta(BlochState{rr}, dd), oracle::fisher_sld(rr, dd),
                1e-9 * (1.0 + oracle::fisher_sld(rr, dd)));
  }
}

TEST(Fisher, RotationInvariant) {
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(Eigen::Matrix3d::Random());
  const Eigen::Matrix3d O = qr.householderQ();
  const Vector3 r(0.2, -0.4, 0.5), dr(0.3, 0.7, -0.1);
  EXPECT_NEAR(fisher_theta(BlochState{r}, dr), fisher_theta(BlochState{O * r}, O * dr), 1e-12);
}

TEST(Fisher, PureStateLimitRules) {
  const Vector3 r(0.0, 0.0, 1.0);
  EXPECT_NEAR(fisher_theta(BlochState{r}, Vector3(2.0, 0.0, 0.0)), 4.0, 1e-15);
  EXPECT_THROW(fisher_theta(BlochState{r}, Vector3(0.0, 0.0, 0.5)), ValidationError);
}

TEST(Fisher, TrajectoryMatchesFourGSquared) {
  const auto m = reversal_model();
  for (double theta : {kPi / 4.0, kPi / 6.0}) {
    const auto F = fisher_trajectory(m, 1, theta, 3.0, 1e-3);
    EXPECT_NEAR(F.forward.front(), 4.0, 1e-6);
    for (std::size_t k = 0; k < F.forward.size(); k += 10) {
      EXPECT_NEAR(F.forward[k], 4.0 * std::norm(analytic_g(k * 1e-3, 0.75, 0.6)), 1e-3);
    }
  }
}

TEST(NonMarkov, MonotoneIsZero) {
  EXPECT_EQ(nonmarkov_measure(sample(decaying, 5.0, 1e-3), 1e-3), 0.0);
  EXPECT_TRUE(noncontractive_intervals(sample(decaying, 5.0, 1e-3), 1e-3).empty());
}

TEST(NonMarkov, AbsCosine) {
  const auto x = sample(abs_cos, kPi, kPi / 2000.0);
  EXPECT_NEAR(nonmarkov_measure(x, kPi / 2000.0), 1.0, 1e-6);
  const auto iv = noncontractive_intervals(x, kPi / 2000.0);
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_NEAR(iv[0].start, kPi / 2.0, 2 * kPi / 2000.0);
  EXPECT_NEAR(iv[0].end, kPi, 1e-12);
}

TEST(NonMarkov, OscillatingCouplingMatchesAnalyticExtrema) {
  const double want = oracle::nonmarkov_from_extrema(0.75, 0.6, 10.0);
  for (double dt : {1e-2, 1e-3}) {
    const auto n = static_cast<std::size_t>(std::llround(10.0 / dt));
    const auto D = optimal_pair_trace_distance(0.75, 0.6, dt, n);
    EXPECT_NEAR(nonmarkov_measure(D, dt), want, 1e-6) << "dt " << dt;
  }
}

TEST(NonMarkov, CouplingThreshold) {
  const double lambda = 0.75, dt = 1e-3;
  const auto weak = optimal_pair_trace_distance(lambda, 0.1, dt, 10000);
  const auto strong = optimal_pair_trace_distance(lambda, 0.6, dt, 10000);
  EXPECT_EQ(nonmarkov_measure(weak, dt), 0.0);
  EXPECT_GT(nonmarkov_measure(strong, dt), 0.0);
  EXPECT_TRUE(noncontractive_intervals(weak, dt).empty());
  EXPECT_FALSE(noncontractive_intervals(strong, dt).empty());
}

TEST(Intervals, SharedMonotonicityWithFisher) {
  const double dt = 1e-3;
  const auto D = optimal_pair_trace_distance(0.75, 0.6, dt, 10000);
  std::vector<double> F(D.size());
  for (std::size_t k = 0; k < D.size(); ++k) F[k] = 4.0 * D[k] * D[k];
  EXPECT_TRUE(intervals_match(noncontractive_intervals(D, dt), increasing_intervals(F, dt), dt));
}

TEST(Intervals, MatchTolerance) {
  const std::vector<Interval> a{{1.0, 2.0}}, b{{1.001, 2.0}}, c{{1.0, 2.0}, {3.0, 4.0}};
  EXPECT_TRUE(intervals_match(a, b, 1e-3));
  EXPECT_FALSE(intervals_match(a, b, 1e-4));
  EXPECT_FALSE(intervals_match(a, c, 1.0));
}

}  // namespace
