#pragma once

#include <limits>
#include <vector>

#include "insat/contact_model.hpp"
#include "insat/spline.hpp"

namespace insat {

/// A rolled-out, time-parameterized full-dimensional trajectory.
/// states[i] is the state at times[i] = i * dt; control i is controls.evaluate(times[i]).
struct Trajectory {
  double dt = 1e-3;
  std::vector<double> times;
  std::vector<JointState> states;
  ControlSpline controls;
  ContactParams contact_params;
  double total_cost = std::numeric_limits<double>::infinity();
  bool converged = false;

  bool empty() const { return states.empty(); }
  int steps() const { return static_cast<int>(states.size()) - 1; }
  const JointState& initial_state() const { return states.front(); }
  const JointState& terminal_state() const { return states.back(); }
  Vector control_at(int i) const { return controls.evaluate(times[i]); }
};

inline double step_time(int i, double dt) { return static_cast<double>(i) * dt; }

}  // namespace insat
