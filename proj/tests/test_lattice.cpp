#include <cmath>

#include <gtest/gtest.h>

#include "insat/dynamics.hpp"
#include "insat/lattice.hpp"
#include "test_util.hpp"

using namespace insat;
using namespace insat::testing;

namespace {

Cell random_cell(std::mt19937& rng, int n, int range) {
  Cell c(n);
  for (int& v : c) v = std::uniform_int_distribution<int>(-range, range)(rng);
  return c;
}

ArmModel weak_gravity_arm(int n) {
  ArmModel m = ArmModel::uniform(n, 0.3, 0.1);
  m.gravity = {0.0, -0.1};
  return m;
}

}  // namespace

TEST(Lambda, CellCenterMapsToItself) {
  const LatticeSpec spec = LatticeSpec::from_model(ArmModel::uniform(2, 1, 1));
  EXPECT_EQ(lambda(vec({0.3, -1.2}), spec), (Cell{3, -12}));
}

TEST(Lambda, BoundaryRoundsUp) {
  LatticeSpec spec = LatticeSpec::from_model(ArmModel::uniform(2, 1, 1), 0.5);
  EXPECT_EQ(lambda(vec({0.25, -0.25}), spec), (Cell{1, 0}));
  EXPECT_EQ(lambda(vec({0.75, -0.75}), spec), (Cell{2, -1}));
}

TEST(Lambda, OutsideLimitsRejected) {
  const LatticeSpec spec = LatticeSpec::from_model(ArmModel::uniform(1, 1, 1));
  EXPECT_THROW(lambda(vec({4.0}), spec), ContractViolation);
}

TEST(Lift, RoundTripAndRestVelocity) {
  const LatticeSpec spec = LatticeSpec::from_model(ArmModel::uniform(3, 1, 1));
  std::mt19937 rng(109);
  for (int trial = 0; trial < 500; ++trial) {
    const Cell c = random_cell(rng, 3, 31);
    const JointState x = lift(c, spec);
    EXPECT_EQ(lambda(x, spec), c);
    EXPECT_EQ(x.qdot, Vector::Zero(3));
  }
  for (int trial = 0; trial < 500; ++trial) {
    const Vector q = random_vector(rng, 3, 3.0);
    EXPECT_LE((lift(lambda(q, spec), spec).q - q).cwiseAbs().maxCoeff(), 0.5 * spec.resolution + 1e-12);
  }
}

TEST(Heuristic, MetricProperties) {
  const LatticeSpec spec = LatticeSpec::from_model(ArmModel::uniform(3, 1, 1));
  EXPECT_EQ(heuristic({1, 2, 3}, {1, 2, 3}, spec), 0.0);
  EXPECT_DOUBLE_EQ(heuristic({1, 2, 3}, {1, 3, 3}, spec), spec.resolution);
  std::mt19937 rng(113);
  for (int trial = 0; trial < 1000; ++trial) {
    const Cell a = random_cell(rng, 3, 20), b = random_cell(rng, 3, 20), c = random_cell(rng, 3, 20);
    EXPECT_LE(heuristic(a, c, spec), heuristic(a, b, spec) + heuristic(b, c, spec) + 1e-12);
    EXPECT_EQ(heuristic(a, b, spec) == 0.0, a == b);
  }
}

TEST(Successors, InteriorFreeCellHasFullBranching) {
  const ArmModel m = weak_gravity_arm(3);
  const LatticeSpec spec = LatticeSpec::from_model(m);
  const auto s = successors({2, -3, 5}, m, World{}, spec);
  EXPECT_EQ(s.size(), 6u);
  for (const Successor& x : s) {
    EXPECT_FALSE(x.is_contact);
    EXPECT_DOUBLE_EQ(heuristic(x.cell, {2, -3, 5}, spec), spec.resolution);
  }
}

TEST(Successors, JointLimitTrimsBranching) {
  ArmModel m = weak_gravity_arm(2);
  m.joint_upper[0] = 0.5;
  const LatticeSpec spec = LatticeSpec::from_model(m);
  EXPECT_EQ(successors({5, 0}, m, World{}, spec).size(), 3u);
}

TEST(Successors, SymmetricOnFreeCells) {
  const ArmModel m = weak_gravity_arm(3);
  const LatticeSpec spec = LatticeSpec::from_model(m);
  World w;
  w.obstacles.push_back(Polygon::box({0.3, -2}, {2, 2}));
  std::mt19937 rng(127);
  for (int trial = 0; trial < 50; ++trial) {
    const Cell a = random_cell(rng, 3, 25);
    if (classify(m, w, lift(a, spec)) != Region::Free) continue;
    for (const Successor& s : successors(a, m, w, spec)) {
      if (s.is_contact) continue;
      const auto back = successors(s.cell, m, w, spec);
      EXPECT_TRUE(std::any_of(back.begin(), back.end(), [&](const Successor& b) { return b.cell == a; }));
    }
  }
}

TEST(Successors, StaticScreenRejectsOnlyOverloadedPoses) {
  ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  m.torque_limits << 2.0, 2.0;
  const LatticeSpec spec = LatticeSpec::from_model(m);
  std::mt19937 rng(131);
  for (int trial = 0; trial < 100; ++trial) {
    const Cell a = random_cell(rng, 2, 25);
    const auto s = successors(a, m, World{}, spec);
    for (int j = 0; j < 2; ++j) {
      for (int dir : {-1, 1}) {
        Cell b = a;
        b[j] += dir;
        if (!spec.contains(b)) continue;
        const bool listed = std::any_of(s.begin(), s.end(), [&](const Successor& x) { return x.cell == b; });
        const Vector g = gravity_torque(m, spec.center(b));
        if (g.cwiseAbs().maxCoeff() <= 2.0) EXPECT_TRUE(listed);
        else EXPECT_FALSE(listed);
      }
    }
  }
}

TEST(Successors, HeuristicConsistentOnGeneratedEdges) {
  const ArmModel m = weak_gravity_arm(2);
  const LatticeSpec spec = LatticeSpec::from_model(m);
  const Cell goal{7, -4};
  std::mt19937 rng(137);
  for (int trial = 0; trial < 200; ++trial) {
    const Cell a = random_cell(rng, 2, 25);
    for (const Successor& s : successors(a, m, World{}, spec))
      EXPECT_LE(heuristic(a, goal, spec), heuristic(a, s.cell, spec) + heuristic(s.cell, goal, spec) + 1e-12);
  }
}

TEST(Successors, MoveIntoWallProjectsOntoSurface) {
  // one rod hanging from the origin, rotating towards a wall x >= d
  ArmModel m = ArmModel::uniform(1, 1.0, 1.0);
  m.gravity = {0.0, -0.1};
  const double r = m.link_radius, q_touch = 0.57;
  const double d = std::sin(q_touch) + r;  // tip cap touches the wall at q_touch
  World w;
  w.obstacles.push_back(Polygon::box({d, -3}, {d + 1, 3}));
  w.contact_pairs = {{0, 0}};
  const LatticeSpec spec = LatticeSpec::from_model(m);
  ASSERT_EQ(classify(m, w, lift({5}, spec)), Region::Free);
  ASSERT_EQ(classify(m, w, lift({6}, spec)), Region::DeepCollision);
  const auto s = successors({5}, m, w, spec);
  ASSERT_EQ(s.size(), 2u);
  const Successor& into = s[0].cell == Cell{6} ? s[0] : s[1];
  EXPECT_EQ(into.cell, Cell{6});
  EXPECT_TRUE(into.is_contact);
  const double slack = w.surface_band / std::cos(q_touch) + 1e-9;
  EXPECT_NEAR(into.anchor[0], q_touch, slack);
  EXPECT_EQ(classify(m, w, JointState::at_rest(into.anchor)), Region::Surface);
}

TEST(Successors, ContactDisabledDropsWallMoves) {
  ArmModel m = ArmModel::uniform(1, 1.0, 1.0);
  m.gravity = {0.0, -0.1};
  World w;
  w.obstacles.push_back(Polygon::box({std::sin(0.57) + m.link_radius, -3}, {3, 3}));
  w.contact_enabled = false;
  const auto s = successors({5}, m, w, LatticeSpec::from_model(m));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].cell, Cell{4});
}
