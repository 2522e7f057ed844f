#pragma once

#include <vector>

#include "insat/arm_model.hpp"

namespace insat {

/// A world-frame force applied to the robot at `point` on `body`.
struct PointForce {
  int body = 0;
  Vec2 point = Vec2::Zero();
  Vec2 force = Vec2::Zero();
};

struct GeneralizedForces {
  Vector tau;                             // net joint torque
  std::vector<PointForce> external_contact;  // environment reaction forces
};

struct BiasTerms {
  Vector coriolis;  // C(q, qdot) qdot
  Vector gravity;   // G(q)
};

Matrix mass_matrix(const ArmModel& model, const Vector& q);

/// dM/dq_k for every k, analytic.
std::vector<Matrix> mass_matrix_derivatives(const ArmModel& model, const Vector& q);

/// C(q, qdot) built from Christoffel symbols of the first kind.
Matrix coriolis_matrix(const ArmModel& model, const JointState& x);

BiasTerms bias_and_gravity(const ArmModel& model, const JointState& x);

Vector gravity_torque(const ArmModel& model, const Vector& q);

/// Sum of J(point)^T f over the listed forces.
Vector contact_torque(const ArmModel& model, const Kinematics& kin,
                      const std::vector<PointForce>& forces);

Vector forward_dynamics(const ArmModel& model, const JointState& x, const GeneralizedForces& forces);

Vector inverse_dynamics(const ArmModel& model, const Vector& q, const Vector& qdot,
                        const Vector& qddot, const std::vector<PointForce>& external_contact = {});

double kinetic_energy(const ArmModel& model, const JointState& x);

/// Gravitational potential relative to q = 0.
double potential_energy(const ArmModel& model, const Vector& q);

double total_energy(const ArmModel& model, const JointState& x);

}  // namespace insat
