#pragma once

#include <cmath>
#include <vector>

#include "insat/world.hpp"

namespace insat {

/// Fixed shape constants of the virtual contact model.
struct ContactConstants {
  double alpha_k = 50.0;       // 1/m
  double alpha_b = 100.0;      // 1/m
  double mu_s = 0.6;
  double mu_k = 0.4;
  double psidot_thres = 0.05;  // m/s
  double rho = 1e-3;

  double mu_bar() const { return 0.5 * (mu_s + mu_k); }
  /// Shape of the friction-coefficient bump; negative for rho < mu_bar.
  double alpha_mu() const;
  void validate() const;
};

/// Tunable virtual-force parameters, one entry per contact pair.
struct ContactParams {
  Vector k;   // N
  Vector b;   // N*s/m
  Vector mu;  // upper bound on the virtual friction coefficient
  ContactConstants constants;

  int pair_count() const { return static_cast<int>(k.size()); }
  static ContactParams zeros(int pairs, const ContactConstants& c = {});
  void validate() const;
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Nonlinear spring-damper normal force, clamped at zero (no adhesion).
double virtual_normal_force(double psi, double psidot, double k, double b, const ContactConstants& c);

/// Velocity-shaped friction coefficient; mu_bar at rest, rho at +-psidot_thres, 0 far away.
double virtual_friction_coeff(double psidot, const ContactConstants& c);

/// Friction opposing `slip_direction` (unit) with magnitude mu_n (gamma_n + omega_n).
Vec2 virtual_friction_force(double gamma_n, double omega_n, double mu_n, const Vec2& slip_direction);

/// The engine reaction at a pair, used to shape the virtual friction.
struct EngineContact {
  double normal = 0.0;           // magnitude of the hard normal force
  Vec2 tangential = Vec2::Zero();  // hard friction force on the robot
};

struct VirtualForce {
  double normal = 0.0;  // Gamma^N
  Vec2 friction = Vec2::Zero();
  Vec2 total(const ContactQuery& q) const { return normal * q.normal + friction; }
};

/// Per-pair virtual forces acting on the robot. `engine` is either empty or
/// aligned with `contacts`.
std::vector<VirtualForce> virtual_forces(const ArmModel& model, const JointState& x,
                                         const std::vector<ContactQuery>& contacts, const ContactParams& p,
                                         const std::vector<EngineContact>& engine = {});

/// Sum of J^T (n Gamma^N + Gamma^f) over the contact pairs, as a torque on the arm.
Vector generalized_virtual_torque(const ArmModel& model, const JointState& x,
                                  const std::vector<ContactQuery>& contacts, const ContactParams& p,
                                  const std::vector<EngineContact>& engine = {});

}  // namespace insat
