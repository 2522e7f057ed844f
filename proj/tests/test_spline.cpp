#include <gtest/gtest.h>

#include "insat/spline.hpp"
#include "test_util.hpp"

using namespace insat;
using namespace insat::testing;

namespace {
ControlSpline ramp(Interpolation kind) {
  ControlSpline s = ControlSpline::constant(4, 0.1, Vector::Zero(2), kind);
  s.knot_values = {vec({0, 1}), vec({1, -1}), vec({3, -1}), vec({2, 0})};
  return s;
}
}  // namespace

TEST(Spline, LocateClampsToKnotRange) {
  const ControlSpline s = ramp(Interpolation::Linear);
  EXPECT_EQ(s.locate(-1.0).index, 0);
  EXPECT_EQ(s.locate(-1.0).s, 0.0);
  EXPECT_EQ(s.locate(5.0).index, 2);
  EXPECT_EQ(s.locate(5.0).s, 1.0);
  EXPECT_EQ(s.locate(0.15).index, 1);
  EXPECT_NEAR(s.locate(0.15).s, 0.5, 1e-12);
}

TEST(Spline, KnotsAreInterpolated) {
  for (auto kind : {Interpolation::ZeroOrder, Interpolation::Linear, Interpolation::Cubic}) {
    const ControlSpline s = ramp(kind);
    for (int k = 0; k < 4; ++k) EXPECT_LT((s.evaluate(s.knot_times[k]) - s.knot_values[k]).norm(), 1e-12);
  }
}

TEST(Spline, ZeroOrderHoldsLeftKnot) {
  const ControlSpline s = ramp(Interpolation::ZeroOrder);
  EXPECT_EQ(s.evaluate(0.19), vec({1, -1}));
}

TEST(Spline, LinearMidpoint) {
  const ControlSpline s = ramp(Interpolation::Linear);
  EXPECT_LT((s.evaluate(0.05) - vec({0.5, 0.0})).norm(), 1e-12);
}

TEST(Spline, EveryKindStaysWithinClampedKnots) {
  std::mt19937 rng(61);
  const Vector limit = vec({2.0, 0.5, 1.0});
  for (auto kind : {Interpolation::ZeroOrder, Interpolation::Linear, Interpolation::Cubic}) {
    for (int trial = 0; trial < 100; ++trial) {
      ControlSpline s = ControlSpline::constant(8, 0.05, Vector::Zero(3), kind);
      for (auto& v : s.knot_values) v = random_vector(rng, 3, 4.0);
      s.clamp(limit);
      ASSERT_TRUE(s.within(limit));
      for (double t = 0.0; t <= s.duration(); t += 1e-4) {
        const Vector u = s.evaluate(t);
        EXPECT_TRUE((u.cwiseAbs().array() <= limit.array() + 1e-12).all());
      }
    }
  }
}

TEST(Spline, ValidationRejectsBadKnots) {
  ControlSpline s = ramp(Interpolation::Linear);
  s.knot_times[2] = s.knot_times[1];
  EXPECT_THROW(s.validate(), ContractViolation);
  s = ramp(Interpolation::Linear);
  s.knot_values.pop_back();
  EXPECT_THROW(s.validate(), ContractViolation);
  EXPECT_THROW(ControlSpline::constant(1, 0.1, Vector::Zero(1)), ContractViolation);
}
