#include "insat/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "insat/dynamics.hpp"

namespace insat {

std::size_t CellHash::operator()(const Cell& c) const {
  std::size_t h = 1469598103934665603ull;
  for (int v : c) {
    h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
    h *= 1099511628211ull;
  }
  return h;
}

LatticeSpec LatticeSpec::from_model(const ArmModel& model, double resolution) {
  return {resolution, model.joint_lower, model.joint_upper};
}

void LatticeSpec::validate() const {
  require(resolution > 0.0 && std::isfinite(resolution), "lattice.resolution must be positive");
  require(lower.size() == upper.size() && lower.size() > 0, "lattice: joint limit sizes differ");
  require(lower.allFinite() && upper.allFinite() && (lower.array() <= upper.array()).all(),
          "lattice: joint limits must be finite with lower <= upper");
}

bool LatticeSpec::contains(const Cell& cell) const {
  if (static_cast<int>(cell.size()) != dof()) return false;
  const Vector c = center(cell);
  return (c.array() >= lower.array()).all() && (c.array() <= upper.array()).all();
}

Vector LatticeSpec::center(const Cell& cell) const {
  Vector c(cell.size());
  for (std::size_t j = 0; j < cell.size(); ++j) c[j] = cell[j] * resolution;
  return c;
}

Cell lambda(const Vector& q, const LatticeSpec& spec) {
  require(q.size() == spec.dof() && q.allFinite(), "lambda: configuration size mismatch");
  require((q.array() >= spec.lower.array()).all() && (q.array() <= spec.upper.array()).all(),
          "lambda: configuration outside the joint limits");
  Cell c(q.size());
  for (Eigen::Index j = 0; j < q.size(); ++j) c[j] = static_cast<int>(std::floor(q[j] / spec.resolution + 0.5));
  return c;
}

JointState lift(const Cell& cell, const LatticeSpec& spec) { return JointState::at_rest(spec.center(cell)); }

double heuristic(const Cell& a, const Cell& b, const LatticeSpec& spec) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = static_cast<double>(a[j] - b[j]);
    s += d * d;
  }
  return spec.resolution * std::sqrt(s);
}

bool bracing_available(const ArmModel& model, const World& world, const JointState& x) {
  if (!world.contact_enabled) return false;
  const std::vector<ContactQuery> q = query_contacts(model, world, x);
  return std::any_of(q.begin(), q.end(), [&](const ContactQuery& c) { return c.psi <= world.surface_band; });
}

bool statically_admissible(const ArmModel& model, const Vector& q) {
  return (gravity_torque(model, q).cwiseAbs().array() <= model.torque_limits.array()).all();
}

std::vector<Successor> successors(const Cell& cell, const ArmModel& model, const World& world,
                                  const LatticeSpec& spec) {
  std::vector<Successor> out;
  auto seen = [&](const Cell& c) {
    return c == cell || std::any_of(out.begin(), out.end(), [&](const Successor& s) { return s.cell == c; });
  };
  for (int j = 0; j < spec.dof(); ++j) {
    for (int dir : {-1, 1}) {
      Cell next = cell;
      next[j] += dir;
      if (!spec.contains(next)) continue;
      const JointState x = lift(next, spec);
      switch (classify(model, world, x)) {
        case Region::Free:
          if (statically_admissible(model, x.q) && !seen(next)) out.push_back({next, false, x.q});
          break;
        case Region::Surface:
          if (!world.contact_enabled) break;
          if ((bracing_available(model, world, x) || statically_admissible(model, x.q)) && !seen(next))
            out.push_back({next, true, x.q});
          break;
        case Region::DeepCollision: {
          if (!world.contact_enabled) break;
          const ProjectionResult p = project_to_surface(model, world, x);
          if (!p.state) break;
          const Vector& q = p.state->q;
          if ((q.array() < spec.lower.array()).any() || (q.array() > spec.upper.array()).any()) break;
          const Cell projected = lambda(q, spec);
          if (!spec.contains(projected) || seen(projected)) break;
          if (bracing_available(model, world, *p.state) || statically_admissible(model, q))
            out.push_back({projected, true, q});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace insat
