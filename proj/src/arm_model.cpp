#include "insat/arm_model.hpp"

#include <cmath>
#include <string>

namespace insat {
namespace {

void require_size(const Vector& v, int n, const char* field) {
  require(v.size() == n, std::string("arm.") + field + ": expected " + std::to_string(n) +
                             " entries, got " + std::to_string(v.size()));
}

void require_positive(const Vector& v, const char* field) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i]) && v[i] > 0.0,
            std::string("arm.") + field + "[" + std::to_string(i) + "] must be positive");
  }
}

}  // namespace

void ArmModel::validate() const {
  const int n = dof();
  require(n >= 1, "arm.link_lengths: at least one link is required");
  require_size(link_masses, n, "link_masses");
  require_size(link_com_offsets, n, "link_com_offsets");
  require_size(joint_damping, n, "joint_damping");
  require_size(torque_limits, n, "torque_limits");
  require_size(velocity_limits, n, "velocity_limits");
  require_size(acceleration_limits, n, "acceleration_limits");
  require_size(joint_lower, n, "joint_lower");
  require_size(joint_upper, n, "joint_upper");
  require_positive(link_lengths, "link_lengths");
  require_positive(link_masses, "link_masses");
  require_positive(link_com_offsets, "link_com_offsets");
  require_positive(torque_limits, "torque_limits");
  require_positive(velocity_limits, "velocity_limits");
  require_positive(acceleration_limits, "acceleration_limits");
  for (int i = 0; i < n; ++i) {
    require(joint_damping[i] >= 0.0, "arm.joint_damping[" + std::to_string(i) + "] must be >= 0");
    require(joint_lower[i] < joint_upper[i],
            "arm.joint_lower[" + std::to_string(i) + "] must be below joint_upper");
  }
  require(payload_mass >= 0.0 && std::isfinite(payload_mass), "arm.payload_mass must be >= 0");
  require(link_radius > 0.0, "arm.link_radius must be positive");
  require(payload_radius > 0.0, "arm.payload_radius must be positive");
  require(gravity.allFinite(), "arm.gravity must be finite");
}

ArmModel ArmModel::uniform(int n, double length, double mass) {
  ArmModel m;
  m.link_lengths = Vector::Constant(n, length);
  m.link_masses = Vector::Constant(n, mass);
  m.link_com_offsets = Vector::Constant(n, 0.5 * length);
  m.joint_damping = Vector::Zero(n);
  m.torque_limits = Vector::Constant(n, 1e3);
  m.velocity_limits = Vector::Constant(n, 1e3);
  m.acceleration_limits = Vector::Constant(n, 1e4);
  m.joint_lower = Vector::Constant(n, -std::numbers::pi);
  m.joint_upper = Vector::Constant(n, std::numbers::pi);
  return m;
}

Kinematics forward_kinematics(const ArmModel& model, const Vector& q) {
  const int n = model.dof();
  require(q.size() == n, "forward_kinematics: q has wrong dimension");
  Kinematics kin;
  kin.joints.resize(n + 1);
  kin.coms.resize(n);
  kin.absolute_angles.resize(n);
  kin.joints[0] = model.base_position;
  double angle = model.base_angle;
  for (int i = 0; i < n; ++i) {
    angle += q[i];
    kin.absolute_angles[i] = angle;
    const Vec2 dir(std::cos(angle), std::sin(angle));
    kin.coms[i] = kin.joints[i] + model.link_com_offsets[i] * dir;
    kin.joints[i + 1] = kin.joints[i] + model.link_lengths[i] * dir;
  }
  return kin;
}

Matrix point_jacobian(const ArmModel& model, const Kinematics& kin, int body, const Vec2& point) {
  const int n = model.dof();
  const int link = body >= n ? n - 1 : body;
  Matrix J = Matrix::Zero(2, n);
  for (int j = 0; j <= link; ++j) J.col(j) = perp(point - kin.joints[j]);
  return J;
}

}  // namespace insat
