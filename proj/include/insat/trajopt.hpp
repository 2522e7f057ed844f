#pragma once

#include <vector>

#include "insat/cost.hpp"
#include "insat/simulate.hpp"

namespace insat {

struct SolveSettings {
  double dt = 1e-3;
  double horizon = 0.5;  // s, for solves from scratch
  int knots = 11;
  Interpolation interpolation = Interpolation::Linear;
  int max_iterations = 40;
  double alpha_min = 1.0 / 64.0;
  double reg_init = 1e-6;
  double reg_min = 1e-9;
  double reg_max = 1e8;
  double reg_increase = 10.0;
  double reg_decrease = 0.5;
  double tolerance = 1e-6;  // relative cost decrease that ends the iLQR loop
  int outer_iterations = 2;
  int contact_sweeps = 3;
  int golden_iterations = 12;
  double k_max = 200.0;
  double b_max = 50.0;
  double mu_max = 1.0;
  double active_gap = 0.05;  // m, pairs closer than this somewhere along the rollout get tuned
  double fd_step = 1e-7;

  int steps() const;
  void validate() const;
};

/// Where the terminal joint position is pulled to, and the cell it must land in.
struct Target {
  Vector q;
  Vector center;
  double half_width = 0.05;

  bool reached(const Vector& q_final) const;
};

struct SolveStats {
  int iterations = 0;  // accepted iLQR steps over all outer iterations
  int rollouts = 0;
  std::vector<double> cost_history;  // after the initial rollout and every accepted step
};

class TrajectoryOptimizer {
 public:
  TrajectoryOptimizer(ArmModel model, World world, CostWeights weights, SolveSettings settings,
                      ContactConstants constants = {});

  const SolveSettings& settings() const { return settings_; }
  const CostWeights& weights() const { return weights_; }
  const ArmModel& model() const { return model_; }
  const World& world() const { return world_; }

  /// iLQR from `start` towards `target`. `init` (optional) supplies the control spline and
  /// contact parameters; its first state must equal start. Throws DivergenceError when the
  /// initial rollout blows up.
  Trajectory solve(const JointState& start, const Target& target, const Trajectory* init = nullptr,
                   SolveStats* stats = nullptr) const;

  /// Joins prefix and suffix into one spline and re-optimizes it towards `target`.
  Trajectory warm_start(const Trajectory& prefix, const Trajectory& suffix, const Target& target,
                        SolveStats* stats = nullptr) const;

  /// Rolls `controls` out from x0 and fills total_cost and converged.
  Trajectory simulate(const JointState& x0, const ControlSpline& controls, const ContactParams& params,
                      const Target& target) const;

  /// J_total of an already rolled-out trajectory.
  double total_cost(const Trajectory& traj, const Vector& q_target) const;

  /// Gravity compensation interpolated from start to target, clamped to the torque limits.
  ControlSpline initial_guess(const JointState& start, const Target& target) const;

 private:
  ArmModel model_;
  World world_;
  CostWeights weights_;
  SolveSettings settings_;
  ContactConstants constants_;
};

/// Knots placed on step boundaries, knot_steps[k] = round(k * steps / (knots - 1)).
std::vector<int> knot_steps(int steps, int knots);

/// Concatenate two splines whose knots lie on multiples of dt; the suffix is shifted by the
/// prefix duration and the seam keeps the prefix's final knot.
ControlSpline concatenate(const ControlSpline& prefix, const ControlSpline& suffix, double dt);

}  // namespace insat
