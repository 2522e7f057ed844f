#include "insat/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "insat/trajectory.hpp"

namespace insat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec2 closest_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return a + t * d;
}

// Closest points between segments [a, b] and [c, d].
std::pair<Vec2, Vec2> closest_segment_segment(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  std::pair<Vec2, Vec2> best{a, c};
  double best_d2 = kInf;
  auto consider = [&](const Vec2& p, const Vec2& q) {
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {p, q};
    }
  };
  consider(a, closest_on_segment(c, d, a));
  consider(b, closest_on_segment(c, d, b));
  consider(closest_on_segment(a, b, c), c);
  consider(closest_on_segment(a, b, d), d);
  // proper crossing
  const Vec2 r = b - a, s = d - c;
  const double denom = cross2(r, s);
  if (std::abs(denom) > 1e-300) {
    const double t = cross2(c - a, s) / denom;
    const double u = cross2(c - a, r) / denom;
    if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) consider(a + t * r, a + t * r);
  }
  return best;
}

struct Interval {
  double lo = kInf, hi = -kInf;
};

Interval project(const std::vector<Vec2>& pts, const Vec2& axis) {
  Interval iv;
  for (const Vec2& p : pts) {
    const double s = p.dot(axis);
    iv.lo = std::min(iv.lo, s);
    iv.hi = std::max(iv.hi, s);
  }
  return iv;
}

}  // namespace

Polygon Polygon::box(const Vec2& min, const Vec2& max) {
  return {{min, Vec2(max.x(), min.y()), max, Vec2(min.x(), max.y())}};
}

void Polygon::validate() const {
  const std::size_t n = vertices.size();
  require(n >= 3, "polygon needs at least 3 vertices");
  for (const Vec2& v : vertices) require(v.allFinite(), "polygon vertex is not finite");
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    const Vec2& c = vertices[(i + 2) % n];
    require((b - a).norm() > 1e-12, "polygon has a zero-length edge");
    require(cross2(b - a, c - b) > 0.0, "polygon must be convex with counter-clockwise vertices");
  }
}

void World::validate(const ArmModel& model) const {
  require(surface_band > 0.0, "world.surface_band must be positive");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    try {
      obstacles[i].validate();
    } catch (const ContractViolation& e) {
      throw ContractViolation("world.obstacles[" + std::to_string(i) + "]: " + e.what());
    }
  }
  for (std::size_t i = 0; i < contact_pairs.size(); ++i) {
    const ContactPair& p = contact_pairs[i];
    const std::string field = "world.contact_pairs[" + std::to_string(i) + "]";
    require(p.body >= 0 && p.body < model.body_count(), field + ".body out of range");
    require(p.obstacle >= 0 && p.obstacle < static_cast<int>(obstacles.size()),
            field + ".obstacle out of range");
  }
  require(surface.stiffness > 0.0, "world.surface.stiffness must be positive");
  require(surface.damping >= 0.0, "world.surface.damping must be >= 0");
  require(surface.stick_velocity > 0.0, "world.surface.stick_velocity must be positive");
}

std::vector<ContactPair> World::all_pairs(const ArmModel& model, std::size_t obstacle_count) {
  std::vector<ContactPair> out;
  for (int b = 0; b < model.body_count(); ++b)
    for (std::size_t o = 0; o < obstacle_count; ++o) out.push_back({b, static_cast<int>(o)});
  return out;
}

SegmentDistance segment_polygon_distance(const Vec2& a, const Vec2& b, const Polygon& poly) {
  const auto& V = poly.vertices;
  const std::size_t n = V.size();
  const std::vector<Vec2> seg{a, b};

  // Separating-axis test over polygon edge normals and the segment normal.
  std::vector<Vec2> axes;
  axes.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) axes.push_back(-perp(V[(i + 1) % n] - V[i]).normalized());
  const Vec2 ab = b - a;
  const bool has_segment_axis = ab.norm() > 1e-12;
  if (has_segment_axis) axes.push_back(perp(ab).normalized());

  double depth = kInf;
  Vec2 normal = Vec2::UnitY();
  bool segment_axis = false;
  bool separated = false;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const Interval s = project(seg, axes[k]);
    const Interval p = project(V, axes[k]);
    const double push_pos = p.hi - s.lo;  // move segment along +axis
    const double push_neg = s.hi - p.lo;  // move segment along -axis
    if (push_pos < 0.0 || push_neg < 0.0) {
      separated = true;
      break;
    }
    if (push_pos < depth) {
      depth = push_pos;
      normal = axes[k];
      segment_axis = k == n;
    }
    if (push_neg < depth) {
      depth = push_neg;
      normal = -axes[k];
      segment_axis = k == n;
    }
  }

  if (separated) {
    double best = kInf;
    SegmentDistance out{kInf, Vec2::UnitY(), a};
    for (std::size_t i = 0; i < n; ++i) {
      const auto [p, c] = closest_segment_segment(a, b, V[i], V[(i + 1) % n]);
      const double d = (p - c).norm();
      if (d < best) {
        best = d;
        out = {d, (p - c) / d, p};
      }
    }
    return out;
  }

  Vec2 point;
  if (segment_axis) {
    // deepest polygon vertex, dropped onto the segment
    std::size_t deepest = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (V[i].dot(normal) > V[deepest].dot(normal)) deepest = i;
    point = closest_on_segment(a, b, V[deepest]);
  } else {
    const double sa = a.dot(normal), sb = b.dot(normal);
    if (std::abs(sa - sb) <= 1e-12 * (1.0 + std::abs(sa)))
      point = 0.5 * (a + b);
    else
      point = sa < sb ? a : b;
  }
  return {-depth, normal, point};
}

std::pair<Vec2, Vec2> body_segment(const ArmModel& model, const Kinematics& kin, int body) {
  if (body >= model.dof()) return {kin.tip(), kin.tip()};
  return {kin.joints[body], kin.joints[body + 1]};
}

double body_radius(const ArmModel& model, int body) {
  return body >= model.dof() ? model.payload_radius : model.link_radius;
}

ContactQuery query_pair(const ArmModel& model, const World& world, const Kinematics& kin,
                        const JointState& x, int body, int obstacle) {
  const auto [a, b] = body_segment(model, kin, body);
  const SegmentDistance sd = segment_polygon_distance(a, b, world.obstacles[obstacle]);
  const double r = body_radius(model, body);
  ContactQuery q;
  q.psi = sd.distance - r;
  q.normal = sd.normal;
  q.witness = sd.point - r * sd.normal;
  q.psidot = sd.normal.dot(point_jacobian(model, kin, body, q.witness) * x.qdot);
  q.body = body;
  q.obstacle = obstacle;
  return q;
}

std::vector<ContactQuery> query_contacts(const ArmModel& model, const World& world, const JointState& x) {
  std::vector<ContactQuery> out;
  if (world.contact_pairs.empty()) return out;
  const Kinematics kin = forward_kinematics(model, x.q);
  out.reserve(world.contact_pairs.size());
  for (std::size_t i = 0; i < world.contact_pairs.size(); ++i) {
    const ContactPair& p = world.contact_pairs[i];
    ContactQuery q = query_pair(model, world, kin, x, p.body, p.obstacle);
    q.pair_index = static_cast<int>(i);
    out.push_back(q);
  }
  return out;
}

std::vector<ContactQuery> query_all(const ArmModel& model, const World& world, const JointState& x) {
  std::vector<ContactQuery> out;
  if (world.obstacles.empty()) return out;
  const Kinematics kin = forward_kinematics(model, x.q);
  for (int b = 0; b < model.body_count(); ++b) {
    for (std::size_t o = 0; o < world.obstacles.size(); ++o) {
      ContactQuery q = query_pair(model, world, kin, x, b, static_cast<int>(o));
      const auto it = std::find(world.contact_pairs.begin(), world.contact_pairs.end(),
                                ContactPair{b, static_cast<int>(o)});
      q.pair_index = it == world.contact_pairs.end() ? -1 : static_cast<int>(it - world.contact_pairs.begin());
      out.push_back(q);
    }
  }
  return out;
}

double min_clearance(const ArmModel& model, const World& world, const JointState& x) {
  double psi = kInf;
  for (const ContactQuery& q : query_all(model, world, x)) psi = std::min(psi, q.psi);
  return psi;
}

Region classify(const ArmModel& model, const World& world, const JointState& x) {
  const double psi = min_clearance(model, world, x);
  if (psi > world.surface_band) return Region::Free;
  if (psi >= -world.surface_band) return Region::Surface;
  return Region::DeepCollision;
}

ProjectionResult project_to_surface(const ArmModel& model, const World& world, const JointState& x,
                                    int max_iterations) {
  const double beta = world.surface_band;
  JointState cur = x;
  Vector prev_q = x.q;
  for (int it = 0; it <= max_iterations; ++it) {
    auto queries = query_all(model, world, cur);
    auto deepest = std::min_element(queries.begin(), queries.end(),
                                    [](const auto& l, const auto& r) { return l.psi < r.psi; });
    if (deepest == queries.end() || deepest->psi >= -beta) {
      if (it == 0) return {cur, 0};
      if (deepest == queries.end() || deepest->psi > beta) {
        // overshot into free space: bisect back towards the last deep pose
        Vector lo = prev_q, hi = cur.q;
        for (int k = 0; k < 60; ++k) {
          cur.q = 0.5 * (lo + hi);
          const double psi = min_clearance(model, world, cur);
          if (psi < -beta)
            lo = cur.q;
          else if (psi > beta)
            hi = cur.q;
          else
            break;
        }
        if (classify(model, world, cur) != Region::Surface) return {std::nullopt, it};
        queries = query_all(model, world, cur);
      }
      // drop the approaching normal velocity of every active contact
      const Kinematics kin = forward_kinematics(model, cur.q);
      for (const ContactQuery& q : queries) {
        if (q.psi > beta) continue;
        const Vector a = (q.normal.transpose() * point_jacobian(model, kin, q.body, q.witness)).transpose();
        const double rate = a.dot(cur.qdot);
        if (rate < 0.0 && a.squaredNorm() > 1e-16) cur.qdot -= (rate / a.squaredNorm()) * a;
      }
      return {cur, it};
    }
    if (it == max_iterations) break;
    const Kinematics kin = forward_kinematics(model, cur.q);
    const Vector a =
        (deepest->normal.transpose() * point_jacobian(model, kin, deepest->body, deepest->witness)).transpose();
    const double a2 = a.squaredNorm();
    if (a2 < 1e-16) break;
    prev_q = cur.q;
    cur.q -= (0.25 * deepest->psi / a2) * a;
  }
  return {std::nullopt, max_iterations};
}

bool state_is_valid(const ArmModel& model, const World& world, const JointState& x) {
  if (!x.finite()) return false;
  if ((x.qdot.cwiseAbs().array() > model.velocity_limits.array()).any()) return false;
  if ((x.q.array() < model.joint_lower.array()).any() || (x.q.array() > model.joint_upper.array()).any())
    return false;
  const Region r = classify(model, world, x);
  return world.contact_enabled ? r != Region::DeepCollision : r == Region::Free;
}

bool trajectory_is_valid(const ArmModel& model, const World& world, const Trajectory& traj) {
  require(!traj.states.empty(), "trajectory_is_valid: empty trajectory");
  return std::all_of(traj.states.begin(), traj.states.end(),
                     [&](const JointState& x) { return state_is_valid(model, world, x); });
}

}  // namespace insat
