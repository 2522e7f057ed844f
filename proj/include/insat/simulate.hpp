#pragma once

#include <vector>

#include "insat/dynamics.hpp"
#include "insat/trajectory.hpp"

namespace insat {

/// Stiff penalty reaction at one penetrating (body, obstacle) combination.
struct HardContact {
  ContactQuery query;
  double normal_force = 0.0;
  Vec2 tangential = Vec2::Zero();  // friction on the robot

  Vec2 force() const { return normal_force * query.normal + tangential; }
};

/// Reaction forces for every penetrating combination in `queries`.
std::vector<HardContact> hard_contact_forces(const ArmModel& model, const World& world,
                                             const ContactConstants& friction, const JointState& x,
                                             const std::vector<ContactQuery>& queries);

struct StepDetail {
  JointState next;
  Vector u;        // after saturation
  Vector tau_net;  // u plus the generalized virtual force
  Vector qddot;
  std::vector<HardContact> hard;
  std::vector<ContactQuery> pairs;  // one per world contact pair
  std::vector<VirtualForce> virtual_forces;
};

constexpr double kDefaultBlowup = 1e6;

/// Semi-implicit Euler with saturated input, hard penalty contact and virtual forces.
/// Throws DivergenceError when the state leaves the blow-up bound.
StepDetail step_detailed(const ArmModel& model, const World& world, const ContactParams& params,
                         const JointState& x, const Vector& u, double dt, double blowup = kDefaultBlowup);

JointState step(const ArmModel& model, const World& world, const ContactParams& params, const JointState& x,
                const Vector& u, double dt, double blowup = kDefaultBlowup);

/// Roll the control spline out from x0 for `steps` steps of dt.
Trajectory rollout(const ArmModel& model, const World& world, const ContactParams& params,
                   const JointState& x0, const ControlSpline& controls, double dt, int steps);

}  // namespace insat
