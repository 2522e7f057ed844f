#include "insat/dynamics.hpp"

#include <algorithm>

namespace insat {
namespace {

// A lumped mass carried by `link`: each rod's COM and the tip payload.
struct MassPoint {
  int link;
  Vec2 point;
  double mass;
  double inertia;  // about the COM, planar
};

std::vector<MassPoint> mass_points(const ArmModel& model, const Kinematics& kin) {
  const int n = model.dof();
  std::vector<MassPoint> out;
  out.reserve(n + 1);
  for (int i = 0; i < n; ++i) {
    const double m = model.link_masses[i];
    const double L = model.link_lengths[i];
    const double inertia = model.mass_model == MassModel::UniformRod ? m * L * L / 12.0 : 0.0;
    out.push_back({i, kin.coms[i], m, inertia});
  }
  if (model.has_payload()) out.push_back({n - 1, kin.tip(), model.payload_mass, 0.0});
  return out;
}

void check_state(const ArmModel& model, const JointState& x) {
  require(x.q.size() == model.dof() && x.qdot.size() == model.dof(),
          "joint state dimension does not match the arm");
}

}  // namespace

Matrix mass_matrix(const ArmModel& model, const Vector& q) {
  const int n = model.dof();
  require(q.size() == n, "mass_matrix: q has wrong dimension");
  const Kinematics kin = forward_kinematics(model, q);
  Matrix M = Matrix::Zero(n, n);
  for (const MassPoint& mp : mass_points(model, kin)) {
    const Matrix J = point_jacobian(model, kin, mp.link, mp.point);
    M.noalias() += mp.mass * J.transpose() * J;
    // angular Jacobian is 1 for every joint up to the carrying link
    M.topLeftCorner(mp.link + 1, mp.link + 1).array() += mp.inertia;
  }
  return M;
}

std::vector<Matrix> mass_matrix_derivatives(const ArmModel& model, const Vector& q) {
  const int n = model.dof();
  const Kinematics kin = forward_kinematics(model, q);
  std::vector<Matrix> dM(n, Matrix::Zero(n, n));
  for (const MassPoint& mp : mass_points(model, kin)) {
    const Matrix J = point_jacobian(model, kin, mp.link, mp.point);
    for (int k = 0; k <= mp.link; ++k) {
      // d/dq_k of column l is -(p - o_max(k,l)) for l <= link
      Matrix dJ = Matrix::Zero(2, n);
      for (int l = 0; l <= mp.link; ++l) dJ.col(l) = -(mp.point - kin.joints[std::max(k, l)]);
      const Matrix prod = J.transpose() * dJ;
      dM[k] += mp.mass * (prod + prod.transpose());
    }
  }
  return dM;
}

Matrix coriolis_matrix(const ArmModel& model, const JointState& x) {
  check_state(model, x);
  const int n = model.dof();
  const std::vector<Matrix> dM = mass_matrix_derivatives(model, x.q);
  Matrix C = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) {
        const double christoffel = 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k));
        c += christoffel * x.qdot[k];
      }
      C(i, j) = c;
    }
  }
  return C;
}

Vector gravity_torque(const ArmModel& model, const Vector& q) {
  const Kinematics kin = forward_kinematics(model, q);
  Vector G = Vector::Zero(model.dof());
  for (const MassPoint& mp : mass_points(model, kin)) {
    G.noalias() -= mp.mass * point_jacobian(model, kin, mp.link, mp.point).transpose() * model.gravity;
  }
  return G;
}

BiasTerms bias_and_gravity(const ArmModel& model, const JointState& x) {
  check_state(model, x);
  const int n = model.dof();
  const Kinematics kin = forward_kinematics(model, x.q);

  // Absolute link rates; with qddot = 0 a point on link i accelerates by
  // -sum_j w_j^2 r_j over the segments leading to it. C(q,qdot)qdot is then
  // sum m J^T a_centripetal, which equals the Christoffel form.
  Vector omega(n);
  double w = 0.0;
  for (int i = 0; i < n; ++i) omega[i] = (w += x.qdot[i]);

  BiasTerms out{Vector::Zero(n), Vector::Zero(n)};
  for (const MassPoint& mp : mass_points(model, kin)) {
    const Matrix J = point_jacobian(model, kin, mp.link, mp.point);
    Vec2 accel = Vec2::Zero();
    for (int j = 0; j < mp.link; ++j) accel -= omega[j] * omega[j] * (kin.joints[j + 1] - kin.joints[j]);
    accel -= omega[mp.link] * omega[mp.link] * (mp.point - kin.joints[mp.link]);
    out.coriolis.noalias() += mp.mass * J.transpose() * accel;
    out.gravity.noalias() -= mp.mass * J.transpose() * model.gravity;
  }
  return out;
}

Vector contact_torque(const ArmModel& model, const Kinematics& kin,
                      const std::vector<PointForce>& forces) {
  Vector tau = Vector::Zero(model.dof());
  for (const PointForce& f : forces) {
    tau.noalias() += point_jacobian(model, kin, f.body, f.point).transpose() * f.force;
  }
  return tau;
}

Vector forward_dynamics(const ArmModel& model, const JointState& x, const GeneralizedForces& forces) {
  check_state(model, x);
  require(forces.tau.size() == model.dof(), "forward_dynamics: tau has wrong dimension");
  require(x.finite() && forces.tau.allFinite(), "forward_dynamics: non-finite input");
  const Matrix M = mass_matrix(model, x.q);
  const BiasTerms bias = bias_and_gravity(model, x);
  Vector rhs = forces.tau - bias.coriolis - bias.gravity -
               model.joint_damping.cwiseProduct(x.qdot);
  if (!forces.external_contact.empty()) {
    const Kinematics kin = forward_kinematics(model, x.q);
    rhs += contact_torque(model, kin, forces.external_contact);
  }
  return M.llt().solve(rhs);
}

Vector inverse_dynamics(const ArmModel& model, const Vector& q, const Vector& qdot,
                        const Vector& qddot, const std::vector<PointForce>& external_contact) {
  const JointState x{q, qdot};
  check_state(model, x);
  require(qddot.size() == model.dof(), "inverse_dynamics: qddot has wrong dimension");
  const BiasTerms bias = bias_and_gravity(model, x);
  Vector tau = mass_matrix(model, q) * qddot + bias.coriolis + bias.gravity +
               model.joint_damping.cwiseProduct(qdot);
  if (!external_contact.empty()) {
    tau -= contact_torque(model, forward_kinematics(model, q), external_contact);
  }
  return tau;
}

double kinetic_energy(const ArmModel& model, const JointState& x) {
  check_state(model, x);
  return 0.5 * x.qdot.dot(mass_matrix(model, x.q) * x.qdot);
}

double potential_energy(const ArmModel& model, const Vector& q) {
  const Kinematics kin = forward_kinematics(model, q);
  const Kinematics ref = forward_kinematics(model, Vector::Zero(model.dof()));
  const auto pts = mass_points(model, kin);
  const auto ref_pts = mass_points(model, ref);
  double v = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v -= pts[i].mass * model.gravity.dot(pts[i].point - ref_pts[i].point);
  }
  return v;
}

double total_energy(const ArmModel& model, const JointState& x) {
  return kinetic_energy(model, x) + potential_energy(model, x.q);
}

}  // namespace insat
