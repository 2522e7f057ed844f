#include "insat/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace insat {

std::vector<HardContact> hard_contact_forces(const ArmModel& model, const World& world,
                                             const ContactConstants& friction, const JointState& x,
                                             const std::vector<ContactQuery>& queries) {
  std::vector<HardContact> out;
  const SurfaceProperties& s = world.surface;
  Kinematics kin;
  bool have_kin = false;
  for (const ContactQuery& q : queries) {
    if (q.psi >= 0.0) continue;
    const double fn = std::max(0.0, -s.stiffness * q.psi - s.damping * q.psidot);
    HardContact hc{q, fn, Vec2::Zero()};
    if (fn > 0.0) {
      if (!have_kin) {
        kin = forward_kinematics(model, x.q);
        have_kin = true;
      }
      const Vec2 v = point_jacobian(model, kin, q.body, q.witness) * x.qdot;
      const Vec2 vt = v - v.dot(q.normal) * q.normal;
      const double speed = vt.norm();
      if (speed < s.stick_velocity)
        hc.tangential = -friction.mu_s * fn * vt / s.stick_velocity;
      else
        hc.tangential = -friction.mu_k * fn * vt / speed;
    }
    out.push_back(hc);
  }
  return out;
}

StepDetail step_detailed(const ArmModel& model, const World& world, const ContactParams& params,
                         const JointState& x, const Vector& u, double dt, double blowup) {
  require(dt > 0.0, "step: dt must be positive");
  require(u.size() == model.dof() && u.allFinite(), "step: control must be finite with one entry per joint");
  StepDetail d;
  d.u = u.cwiseMax(-model.torque_limits).cwiseMin(model.torque_limits);

  const std::vector<ContactQuery> all = query_all(model, world, x);
  d.hard = hard_contact_forces(model, world, params.constants, x, all);

  d.tau_net = d.u;
  if (world.contact_enabled && !world.contact_pairs.empty()) {
    d.pairs.resize(world.contact_pairs.size());
    for (const ContactQuery& q : all)
      if (q.pair_index >= 0) d.pairs[q.pair_index] = q;
    std::vector<EngineContact> engine(d.pairs.size());
    for (const HardContact& h : d.hard) {
      if (h.query.pair_index >= 0) engine[h.query.pair_index] = {h.normal_force, h.tangential};
    }
    d.virtual_forces = virtual_forces(model, x, d.pairs, params, engine);
    const Kinematics kin = forward_kinematics(model, x.q);
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
      const Vec2 f = d.virtual_forces[i].total(d.pairs[i]);
      if (f.isZero(0.0)) continue;
      d.tau_net.noalias() += point_jacobian(model, kin, d.pairs[i].body, d.pairs[i].witness).transpose() * f;
    }
  }

  GeneralizedForces forces{d.tau_net, {}};
  forces.external_contact.reserve(d.hard.size());
  for (const HardContact& h : d.hard) forces.external_contact.push_back({h.query.body, h.query.witness, h.force()});
  d.qddot = forward_dynamics(model, x, forces);

  d.next.qdot = x.qdot + dt * d.qddot;
  d.next.q = x.q + dt * d.next.qdot;
  if (!d.next.finite() || d.next.q.cwiseAbs().maxCoeff() > blowup || d.next.qdot.cwiseAbs().maxCoeff() > blowup)
    throw DivergenceError("simulation diverged: state magnitude exceeded the blow-up bound");
  return d;
}

JointState step(const ArmModel& model, const World& world, const ContactParams& params, const JointState& x,
                const Vector& u, double dt, double blowup) {
  return step_detailed(model, world, params, x, u, dt, blowup).next;
}

Trajectory rollout(const ArmModel& model, const World& world, const ContactParams& params,
                   const JointState& x0, const ControlSpline& controls, double dt, int steps) {
  Trajectory t;
  t.dt = dt;
  t.controls = controls;
  t.contact_params = params;
  t.times.reserve(steps + 1);
  t.states.reserve(steps + 1);
  t.times.push_back(0.0);
  t.states.push_back(x0);
  for (int i = 0; i < steps; ++i) {
    t.states.push_back(step(model, world, params, t.states.back(), controls.evaluate(step_time(i, dt)), dt));
    t.times.push_back(step_time(i + 1, dt));
  }
  return t;
}

}  // namespace insat
