#pragma once

#include <numbers>
#include <vector>

#include "insat/types.hpp"

namespace insat {

enum class MassModel { UniformRod, PointMass };

/// Planar serial arm with revolute joints. Link i spans joint i to joint i+1;
/// at q = 0 the first link points along `base_angle` (default: straight down).
struct ArmModel {
  Vector link_lengths;      // m
  Vector link_masses;       // kg
  Vector link_com_offsets;  // m, measured from the proximal joint
  MassModel mass_model = MassModel::UniformRod;
  Vec2 gravity{0.0, -9.81};
  Vec2 base_position{0.0, 0.0};
  double base_angle = -std::numbers::pi / 2.0;
  Vector joint_damping;        // N*m*s/rad
  Vector torque_limits;        // N*m
  Vector velocity_limits;      // rad/s
  Vector acceleration_limits;  // rad/s^2
  Vector joint_lower;          // rad
  Vector joint_upper;          // rad
  double payload_mass = 0.0;   // kg, point mass at the tip of the last link
  double link_radius = 0.02;   // m, capsule radius used for collision
  double payload_radius = 0.03;

  int dof() const { return static_cast<int>(link_lengths.size()); }
  bool has_payload() const { return payload_mass > 0.0; }
  /// Collision bodies: one capsule per link, plus the payload sphere when present.
  int body_count() const { return dof() + (has_payload() ? 1 : 0); }

  /// Throws ContractViolation naming the offending field.
  void validate() const;

  /// N identical uniform rods with generous limits; COM at mid-link.
  static ArmModel uniform(int n, double length, double mass);
};

/// World-frame positions for one configuration.
struct Kinematics {
  std::vector<Vec2> joints;  // N+1 entries: joint i origin, joints[N] = tip
  std::vector<Vec2> coms;    // N entries
  std::vector<double> absolute_angles;

  const Vec2& tip() const { return joints.back(); }
};

Kinematics forward_kinematics(const ArmModel& model, const Vector& q);

/// 2xN Jacobian of a point rigidly attached to `link` (0-based). The payload
/// body index N maps onto the last link.
Matrix point_jacobian(const ArmModel& model, const Kinematics& kin, int body, const Vec2& point);

}  // namespace insat
