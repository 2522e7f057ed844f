#pragma once

#include <optional>
#include <vector>

#include "insat/arm_model.hpp"

namespace insat {

struct Trajectory;

/// Convex polygon, counter-clockwise vertices, world frame.
struct Polygon {
  std::vector<Vec2> vertices;

  static Polygon box(const Vec2& min, const Vec2& max);
  void validate() const;
};

/// A (body, obstacle) combination allowed to brace. Body index N is the payload.
struct ContactPair {
  int body = 0;
  int obstacle = 0;
  bool operator==(const ContactPair&) const = default;
};

/// Stiff penalty model standing in for the rigid contact reaction.
struct SurfaceProperties {
  double stiffness = 2e4;       // N/m
  double damping = 50.0;        // N*s/m
  double stick_velocity = 1e-2; // m/s, below this friction is viscous up to mu_s
};

struct World {
  std::vector<Polygon> obstacles;
  double surface_band = 5e-3;  // beta, m
  std::vector<ContactPair> contact_pairs;
  SurfaceProperties surface;
  /// When false, touching counts as collision and no contact forces act.
  bool contact_enabled = true;

  void validate(const ArmModel& model) const;
  /// Every body against every obstacle.
  static std::vector<ContactPair> all_pairs(const ArmModel& model, std::size_t obstacle_count);
};

struct ContactQuery {
  double psi = 0.0;       // signed gap, positive = separated
  double psidot = 0.0;    // gap rate
  Vec2 witness = Vec2::Zero();  // on the robot surface
  Vec2 normal = Vec2::UnitY();  // from the obstacle into free space
  int pair_index = -1;
  int body = 0;
  int obstacle = 0;
};

/// Signed distance between a capsule core segment [a, b] and a convex polygon.
struct SegmentDistance {
  double distance;  // negative when overlapping (minimum translation depth)
  Vec2 normal;      // direction that separates the segment from the polygon
  Vec2 point;       // witness on the segment core
};

SegmentDistance segment_polygon_distance(const Vec2& a, const Vec2& b, const Polygon& poly);

/// Core segment of a collision body; the payload is the degenerate segment at the tip.
std::pair<Vec2, Vec2> body_segment(const ArmModel& model, const Kinematics& kin, int body);
double body_radius(const ArmModel& model, int body);

ContactQuery query_pair(const ArmModel& model, const World& world, const Kinematics& kin,
                        const JointState& x, int body, int obstacle);

/// One query per entry of world.contact_pairs.
std::vector<ContactQuery> query_contacts(const ArmModel& model, const World& world, const JointState& x);

/// One query per (body, obstacle) combination, used for collision and reaction forces.
std::vector<ContactQuery> query_all(const ArmModel& model, const World& world, const JointState& x);

enum class Region { Free, Surface, DeepCollision };

Region classify(const ArmModel& model, const World& world, const JointState& x);

/// Smallest signed gap over all body/obstacle combinations (+inf without obstacles).
double min_clearance(const ArmModel& model, const World& world, const JointState& x);

struct ProjectionResult {
  std::optional<JointState> state;  // empty when the iteration cap was hit
  int iterations = 0;
};

ProjectionResult project_to_surface(const ArmModel& model, const World& world, const JointState& x,
                                    int max_iterations = 200);

/// Per-sample feasibility: no deep collision (or no contact at all when contact is
/// disabled), velocity limits and joint limits.
bool state_is_valid(const ArmModel& model, const World& world, const JointState& x);

bool trajectory_is_valid(const ArmModel& model, const World& world, const Trajectory& traj);

}  // namespace insat
