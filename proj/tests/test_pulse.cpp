#include <numbers>

#include <gtest/gtest.h>

#include "jcctl/pulse.hpp"

namespace {

using namespace jcctl;

TEST(Pulse, IdealSquareExamples) {
  const auto spec = PulseSpec::square(100.0, 0.1);
  const auto r = PulseRealization::ideal(spec);
  EXPECT_EQ(sample_pulse(spec, 0.03, r), 0.0);
  EXPECT_EQ(sample_pulse(spec, 0.07, r), 100.0);
}

TEST(Pulse, IdealSineSquaredExample) {
  const auto spec = PulseSpec::sine_squared(100.0, 10.0 * std::numbers::pi);
  EXPECT_NEAR(sample_pulse(spec, 0.05, PulseRealization::ideal(spec)), 100.0, 1e-10);
}

TEST(Pulse, IdealIsPeriodic) {
  for (const auto& spec : {PulseSpec::square(100.0, 0.1),
                           PulseSpec::sine_squared(100.0, 10.0 * std::numbers::pi)}) {
    const auto r = PulseRealization::ideal(spec);
    for (double t = 0.0013; t < 3.0; t += 0.0371) {
      // keep away from square edges, where rounding of t + period decides the side
      const double x = std::fmod(t / 0.05, 1.0);
      if (spec.kind == PulseKind::square && (x < 1e-6 || x > 1 - 1e-6)) continue;
      EXPECT_NEAR(r.value(t + spec.period()), r.value(t), 1e-12 * 100.0);
    }
  }
}

TEST(Pulse, JitteredBoundedAndDeterministic) {
  for (auto spec : {PulseSpec::square(100.0, 0.1),
                    PulseSpec::sine_squared(100.0, 10.0 * std::numbers::pi)}) {
    spec.jitter_fraction = 0.05;
    spec.seed = 42;
    const auto a = PulseRealization::draw(spec, 3, 10.0, 1e-4);
    const auto b = PulseRealization::draw(spec, 3, 10.0, 1e-4);
    const auto c = PulseRealization::draw(spec, 4, 10.0, 1e-4);
    bool differs = false;
    for (double t = 0.0; t <= 10.0; t += 1e-3) {
      EXPECT_LE(std::abs(a.value(t)), 1.05 * 100.0 + 1e-12);
      EXPECT_EQ(a.value(t), b.value(t));
      differs = differs || a.value(t) != c.value(t);
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Pulse, JitteredSquareEdgesOnGrid) {
  auto spec = PulseSpec::square(100.0, 0.1);
  spec.jitter_fraction = 0.05;
  const double dt = 1e-4;
  const auto r = PulseRealization::draw(spec, 0, 10.0, dt);
  // constant inside every step: sampling at 10% and 90% of the step agrees
  for (int k = 0; k < 100000; k += 7) {
    const double t0 = k * dt;
    EXPECT_EQ(r.value(t0 + 0.1 * dt), r.value(t0 + 0.9 * dt)) << "step " << k;
  }
}

TEST(Pulse, ZeroJitterEqualsIdeal) {
  auto spec = PulseSpec::square(100.0, 0.1);
  const auto drawn = PulseRealization::draw(spec, 5, 10.0, 1e-4);
  const auto ideal = PulseRealization::ideal(spec);
  EXPECT_FALSE(drawn.jittered());
  for (double t = 0.0; t < 1.0; t += 0.0123) EXPECT_EQ(drawn.value(t), ideal.value(t));
}

TEST(Pulse, Alignment) {
  EXPECT_NO_THROW(check_pulse_alignment(PulseSpec::square(100.0, 0.1), 1e-4));
  EXPECT_THROW(check_pulse_alignment(PulseSpec::square(100.0, 0.1), 3e-4), ValidationError);
  EXPECT_NO_THROW(check_pulse_alignment(PulseSpec::sine_squared(100.0, 1.0), 3e-4));
}

TEST(Pulse, ParseKind) {
  EXPECT_EQ(parse_pulse_kind("square"), PulseKind::square);
  EXPECT_EQ(parse_pulse_kind("sine_squared"), PulseKind::sine_squared);
  EXPECT_EQ(parse_pulse_kind("none"), PulseKind::none);
  EXPECT_THROW(parse_pulse_kind("triangle"), ValidationError);
}

TEST(Pulse, BeyondHorizonThrows) {
  auto spec = PulseSpec::square(100.0, 0.1);
  spec.jitter_fraction = 0.05;
  const auto r = PulseRealization::draw(spec, 0, 1.0, 1e-4);
  EXPECT_THROW(r.value(50.0), ValidationError);
}

}  // namespace
