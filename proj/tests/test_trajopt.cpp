#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "insat/trajopt.hpp"
#include "test_util.hpp"

using namespace insat;
using namespace insat::testing;

namespace {

Target cell_target(const Vector& center, double half_width = 0.05) { return {center, center, half_width}; }

// Discrete Riccati recursion for the semi-implicit Euler double integrator
// e' = e + dt v', v' = v + dt u / I with cost sum dt (w2 u^2 + w3 v^2) / 2 + w1 e_T^2 / 2.
double riccati_cost(double e0, double v0, double dt, int steps, double inertia, double w1, double w2, double w3) {
  Eigen::Matrix2d A;
  A << 1, dt, 0, 1;
  Eigen::Vector2d B(dt * dt / inertia, dt / inertia);
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Q(1, 1) = dt * w3;
  const double Rr = dt * w2;
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  P(0, 0) = w1;
  for (int i = 0; i < steps; ++i) {
    const double s = Rr + B.dot(P * B);
    const Eigen::RowVector2d BtPA = B.transpose() * P * A;
    P = Q + A.transpose() * P * A - BtPA.transpose() * BtPA / s;
  }
  const Eigen::Vector2d x0(e0, v0);
  return 0.5 * x0.dot(P * x0);
}

ArmModel free_rod() {
  ArmModel m = ArmModel::uniform(1, 1.0, 3.0);  // inertia m L^2 / 3 = 1 about the joint
  m.gravity.setZero();
  return m;
}

CostWeights quadratic_weights() {
  CostWeights w;
  w.norm = NormKind::Quadratic;
  w.w1 = 10.0;
  w.w2 = 0.1;
  w.w3 = 0.05;
  return w;
}

SolveSettings lqr_settings() {
  SolveSettings s;
  s.dt = 0.02;
  s.horizon = 1.0;
  s.knots = 51;
  s.interpolation = Interpolation::ZeroOrder;
  return s;
}

}  // namespace

TEST(Ilqr, MatchesRiccatiOnDoubleIntegrator) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrajectoryOptimizer opt(free_rod(), World{}, quadratic_weights(), lqr_settings());
  SolveStats stats;
  const Trajectory t = opt.solve({vec({0.5}), vec({0.2})}, cell_target(vec({0.0})), nullptr, &stats);
  const double expected = riccati_cost(0.5, 0.2, 0.02, 50, 1.0, 10.0, 0.1, 0.05);
  EXPECT_NEAR(t.total_cost, expected, 1e-6 * expected);
  EXPECT_LE(stats.iterations, 5);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
}

TEST(Ilqr, RiccatiAgreementAcrossStarts) {
  const TrajectoryOptimizer opt(free_rod(), World{}, quadratic_weights(), lqr_settings());
  std::mt19937 rng(107);
  for (int trial = 0; trial < 5; ++trial) {
    const double q0 = uniform(rng, -1, 1), v0 = uniform(rng, -1, 1), goal = uniform(rng, -1, 1);
    const Trajectory t = opt.solve({vec({q0}), vec({v0})}, cell_target(vec({goal})));
    const double expected = riccati_cost(q0 - goal, v0, 0.02, 50, 1.0, 10.0, 0.1, 0.05);
    EXPECT_NEAR(t.total_cost, expected, 1e-6 * expected);
  }
}

TEST(Ilqr, TrivialBoundaryValueProblem) {
  const ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  const TrajectoryOptimizer opt(m, World{}, CostWeights{}, SolveSettings{});
  SolveStats stats;
  const Trajectory t = opt.solve(JointState::at_rest(Vector::Zero(2)), cell_target(Vector::Zero(2)), nullptr, &stats);
  EXPECT_TRUE(t.converged);
  EXPECT_LE(stats.iterations, 2);
  for (int i = 0; i < t.steps(); ++i) EXPECT_LT(t.control_at(i).norm(), 1e-6);
}

TEST(Ilqr, AdjacentCellConvergesMonotonically) {
  const ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  const TrajectoryOptimizer opt(m, World{}, CostWeights{}, SolveSettings{});
  SolveStats stats;
  const Trajectory t = opt.solve(JointState::at_rest(vec({0.3, 0.2})), cell_target(vec({0.4, 0.2})), nullptr, &stats);
  EXPECT_TRUE(t.converged);
  ASSERT_GE(stats.cost_history.size(), 2u);
  for (std::size_t i = 1; i < stats.cost_history.size(); ++i)
    EXPECT_LE(stats.cost_history[i], stats.cost_history[i - 1]);
  EXPECT_EQ(t.total_cost, stats.cost_history.back());
}

TEST(Ilqr, ReturnedTrajectoryIsRolloutConsistent) {
  ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  World w;
  w.obstacles.push_back(Polygon::box({-2, -2}, {2, -0.9}));
  w.contact_pairs = {{1, 0}};
  const TrajectoryOptimizer opt(m, w, CostWeights{}, SolveSettings{});
  const JointState x0 = JointState::at_rest(vec({0.2, 0.1}));
  const Trajectory t = opt.solve(x0, cell_target(vec({0.3, 0.1})));
  const Trajectory again = rollout(m, w, t.contact_params, x0, t.controls, t.dt, t.steps());
  ASSERT_EQ(again.states.size(), t.states.size());
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    EXPECT_EQ(again.states[i].q, t.states[i].q);
    EXPECT_EQ(again.states[i].qdot, t.states[i].qdot);
  }
  EXPECT_NEAR(opt.total_cost(again, vec({0.3, 0.1})), t.total_cost, 1e-9);
}

TEST(Ilqr, ControlsStayWithinLimits) {
  ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  m.torque_limits << 3.0, 1.0;
  const TrajectoryOptimizer opt(m, World{}, CostWeights{}, SolveSettings{});
  const Trajectory t = opt.solve(JointState::at_rest(vec({0.0, 0.0})), cell_target(vec({0.8, -0.5})));
  EXPECT_TRUE(t.controls.within(m.torque_limits));
  for (double s = 0.0; s <= t.controls.duration(); s += 1e-4) {
    const Vector u = t.controls.evaluate(s);
    EXPECT_LE(std::abs(u[0]), 3.0);
    EXPECT_LE(std::abs(u[1]), 1.0);
  }
}

TEST(Ilqr, CubicSplinesRejected) {
  SolveSettings s;
  s.interpolation = Interpolation::Cubic;
  const TrajectoryOptimizer opt(ArmModel::uniform(1, 1, 1), World{}, CostWeights{}, s);
  EXPECT_THROW(opt.solve(JointState::at_rest(vec({0.0})), cell_target(vec({0.1}))), ContractViolation);
}

TEST(Ilqr, SettingsValidated) {
  SolveSettings s;
  s.alpha_min = 1.0;
  EXPECT_THROW(s.validate(), ContractViolation);
  s = SolveSettings{};
  s.horizon = 0.0;
  EXPECT_THROW(s.validate(), ContractViolation);
}

TEST(Knots, StepBoundariesAndConcatenation) {
  EXPECT_EQ(knot_steps(500, 11), (std::vector<int>{0, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500}));
  const double dt = 1e-3;
  ControlSpline a, b;
  for (int k : knot_steps(500, 11)) {
    a.knot_times.push_back(step_time(k, dt));
    a.knot_values.push_back(vec({1.0 * k}));
    b.knot_times.push_back(step_time(k, dt));
    b.knot_values.push_back(vec({-1.0 * k}));
  }
  const ControlSpline c = concatenate(a, b, dt);
  ASSERT_EQ(c.knot_count(), 21);
  EXPECT_EQ(c.knot_times[10], step_time(500, dt));
  EXPECT_EQ(c.knot_values[10][0], 500.0);
  EXPECT_EQ(c.knot_times[20], step_time(1000, dt));
  EXPECT_EQ(c.knot_values[11][0], -50.0);
}

TEST(WarmStart, DoesNotIncreaseCost) {
  const ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  const TrajectoryOptimizer opt(m, World{}, CostWeights{}, SolveSettings{});
  const JointState a = JointState::at_rest(vec({0.3, 0.2}));
  const Target tb = cell_target(vec({0.4, 0.2})), tc = cell_target(vec({0.5, 0.2}));
  const Trajectory prefix = opt.solve(a, tb);
  const Trajectory suffix = opt.solve(JointState::at_rest(tb.center), tc);
  const Trajectory joined = opt.simulate(a, concatenate(prefix.controls, suffix.controls, 1e-3),
                                         suffix.contact_params, tc);
  const Trajectory warm = opt.warm_start(prefix, suffix, tc);
  EXPECT_LE(warm.total_cost, joined.total_cost);
  EXPECT_EQ(warm.steps(), 1000);
  EXPECT_EQ(warm.controls.knot_count(), 21);
  EXPECT_TRUE(warm.converged);
  const Trajectory again = rollout(m, World{}, warm.contact_params, a, warm.controls, warm.dt, warm.steps());
  EXPECT_EQ(again.terminal_state().q, warm.terminal_state().q);
}

TEST(WarmStart, EmptySuffixReoptimizesPrefix) {
  const ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  SolveSettings s;
  s.max_iterations = 2;
  const TrajectoryOptimizer short_opt(m, World{}, CostWeights{}, s);
  const TrajectoryOptimizer opt(m, World{}, CostWeights{}, SolveSettings{});
  const JointState a = JointState::at_rest(vec({0.3, 0.2}));
  const Target tb = cell_target(vec({0.5, 0.2}));
  const Trajectory prefix = short_opt.solve(a, tb);
  const Trajectory warm = opt.warm_start(prefix, Trajectory{}, tb);
  EXPECT_EQ(warm.steps(), prefix.steps());
  EXPECT_LE(warm.total_cost, prefix.total_cost);
}

TEST(ContactParams, TuningKeepsCostMonotoneAndBounded) {
  ArmModel m = ArmModel::uniform(2, 0.5, 1.0);
  World w;
  w.obstacles.push_back(Polygon::box({-2, -2}, {2, -0.98}));
  w.contact_pairs = {{1, 0}};
  SolveSettings s;
  const TrajectoryOptimizer opt(m, w, CostWeights{}, s);
  SolveStats stats;
  const Trajectory t = opt.solve(JointState::at_rest(vec({0.1, 0.0})), cell_target(vec({0.0, 0.0})), nullptr, &stats);
  for (std::size_t i = 1; i < stats.cost_history.size(); ++i)
    EXPECT_LE(stats.cost_history[i], stats.cost_history[i - 1]);
  ASSERT_EQ(t.contact_params.pair_count(), 1);
  EXPECT_GE(t.contact_params.k[0], 0.0);
  EXPECT_LE(t.contact_params.k[0], s.k_max);
  EXPECT_LE(t.contact_params.b[0], s.b_max);
  EXPECT_LE(t.contact_params.mu[0], s.mu_max);
}
