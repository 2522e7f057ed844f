#include "insat/contact_model.hpp"

#include <cmath>
#include <string>

namespace insat {

namespace {
constexpr double kSlipDeadband = 1e-6;  // m/s
}

double ContactConstants::alpha_mu() const {
  const double mb = mu_bar();
  return psidot_thres / std::log(rho / (2.0 * mb - rho));
}

void ContactConstants::validate() const {
  require(alpha_k > 0.0, "contact.alpha_k must be positive");
  require(alpha_b > 0.0, "contact.alpha_b must be positive");
  require(mu_k >= 0.0, "contact.mu_k must be >= 0");
  require(mu_k <= mu_s, "contact.mu_k must not exceed contact.mu_s");
  require(mu_bar() > 0.0, "contact.mu_s must be positive");
  require(psidot_thres > 0.0, "contact.psidot_thres must be positive");
  require(rho > 0.0 && rho < mu_bar(), "contact.rho must lie in (0, (mu_s + mu_k) / 2)");
}

ContactParams ContactParams::zeros(int pairs, const ContactConstants& c) {
  return {Vector::Zero(pairs), Vector::Zero(pairs), Vector::Zero(pairs), c};
}

void ContactParams::validate() const {
  require(b.size() == k.size() && mu.size() == k.size(), "contact params: k, b, mu sizes differ");
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    require(k[i] >= 0.0, "contact.k" + idx + " must be >= 0");
    require(b[i] >= 0.0, "contact.b" + idx + " must be >= 0");
    require(mu[i] >= 0.0, "contact.mu" + idx + " must be >= 0");
  }
  constants.validate();
}

double virtual_normal_force(double psi, double psidot, double k, double b, const ContactConstants& c) {
  const double spring = k * std::exp(-c.alpha_k * psi);
  const double damper = b * logistic(-c.alpha_b * psi) * psidot;
  return std::max(0.0, spring + damper);
}

double virtual_friction_coeff(double psidot, const ContactConstants& c) {
  const double mb = c.mu_bar();
  // even in psidot; evaluating on |psidot| keeps the symmetry exact in floating point
  const double z = std::abs(psidot) / c.alpha_mu();
  // 2 mu_bar / (1 + e^z) written to stay finite for large |z|
  const double shaped = z > 0.0 ? 2.0 * mb * std::exp(-z) / (1.0 + std::exp(-z)) : 2.0 * mb / (1.0 + std::exp(z));
  return mb - std::abs(shaped - mb);
}

Vec2 virtual_friction_force(double gamma_n, double omega_n, double mu_n, const Vec2& slip_direction) {
  return -mu_n * (gamma_n + omega_n) * slip_direction;
}

std::vector<VirtualForce> virtual_forces(const ArmModel& model, const JointState& x,
                                         const std::vector<ContactQuery>& contacts, const ContactParams& p,
                                         const std::vector<EngineContact>& engine) {
  require(engine.empty() || engine.size() == contacts.size(), "virtual_forces: engine list misaligned");
  std::vector<VirtualForce> out(contacts.size());
  if (contacts.empty()) return out;
  const Kinematics kin = forward_kinematics(model, x.q);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const ContactQuery& q = contacts[i];
    const int pair = q.pair_index;
    require(pair >= 0 && pair < p.pair_count(), "virtual_forces: contact pair has no parameters");
    VirtualForce& f = out[i];
    f.normal = virtual_normal_force(q.psi, q.psidot, p.k[pair], p.b[pair], p.constants);

    const double omega_n = engine.empty() ? 0.0 : engine[i].normal;
    const double mu_n = std::min(virtual_friction_coeff(q.psidot, p.constants), p.mu[pair]);
    if (mu_n <= 0.0 || f.normal + omega_n <= 0.0) continue;

    const Vec2 v = point_jacobian(model, kin, q.body, q.witness) * x.qdot;
    const Vec2 vt = v - v.dot(q.normal) * q.normal;
    Vec2 slip = Vec2::Zero();
    if (vt.norm() >= kSlipDeadband) {
      slip = vt.normalized();
    } else if (!engine.empty() && engine[i].tangential.norm() > 0.0) {
      // at rest: push against the engine's stiction
      slip = engine[i].tangential.normalized();
    }
    f.friction = virtual_friction_force(f.normal, omega_n, mu_n, slip);
  }
  return out;
}

Vector generalized_virtual_torque(const ArmModel& model, const JointState& x,
                                  const std::vector<ContactQuery>& contacts, const ContactParams& p,
                                  const std::vector<EngineContact>& engine) {
  Vector tau = Vector::Zero(model.dof());
  if (contacts.empty()) return tau;
  const auto forces = virtual_forces(model, x, contacts, p, engine);
  const Kinematics kin = forward_kinematics(model, x.q);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const Vec2 f = forces[i].total(contacts[i]);
    if (f.isZero(0.0)) continue;
    tau.noalias() += point_jacobian(model, kin, contacts[i].body, contacts[i].witness).transpose() * f;
  }
  return tau;
}

}  // namespace insat
