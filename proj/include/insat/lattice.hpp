#pragma once

#include <functional>
#include <vector>

#include "insat/world.hpp"

namespace insat {

using Cell = std::vector<int>;

struct CellHash {
  std::size_t operator()(const Cell& c) const;
};

/// Uniform joint-space lattice; cell c has center c * resolution.
struct LatticeSpec {
  double resolution = 0.1;  // rad
  Vector lower, upper;      // joint limits

  static LatticeSpec from_model(const ArmModel& model, double resolution = 0.1);
  void validate() const;
  int dof() const { return static_cast<int>(lower.size()); }
  bool contains(const Cell& cell) const;
  Vector center(const Cell& cell) const;
};

/// Nearest cell center per joint, ties rounded up. Velocities are ignored.
Cell lambda(const Vector& q, const LatticeSpec& spec);
inline Cell lambda(const JointState& x, const LatticeSpec& spec) { return lambda(x.q, spec); }

/// Canonical full state of a cell: its center at rest.
JointState lift(const Cell& cell, const LatticeSpec& spec);

struct Successor {
  Cell cell;
  bool is_contact = false;
  Vector anchor;  // joint position the edge should reach (projected pose for contact cells)
};

/// Unit moves along each joint, screened for joint limits and static gravity load.
/// Moves into deep collision are replaced by their projection onto the obstacle surface.
std::vector<Successor> successors(const Cell& cell, const ArmModel& model, const World& world,
                                  const LatticeSpec& spec);

/// Euclidean distance between cell centers.
double heuristic(const Cell& a, const Cell& b, const LatticeSpec& spec);

/// Whether some listed contact pair is within the surface band at x.
bool bracing_available(const ArmModel& model, const World& world, const JointState& x);

/// Static screen: gravity compensation within the torque limits.
bool statically_admissible(const ArmModel& model, const Vector& q);

}  // namespace insat
