#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "insat/lattice.hpp"
#include "insat/trajopt.hpp"

namespace insat {

struct RrtSettings {
  int max_iterations = 5000;
  double step_size = 0.1;  // rad
  double goal_bias = 0.05;
};

struct PlannerConfig {
  double epsilon = 3.0;
  RrtSettings rrt;
  bool seed_enabled = true;
  bool lazy_enabled = true;
  bool reuse_enabled = true;
  double time_budget = 600.0;  // s
  int ancestor_cap = 8;
  int deep_copy_cap = 1;       // extra generations a cell may be re-opened with
  double max_horizon_scale = 4.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Produces trajectories for graph edges. The optimizer-backed implementation is the planner
/// proper; other implementations exist for exercising the search in isolation.
class EdgeBackend {
 public:
  virtual ~EdgeBackend() = default;
  /// Trajectory from `from` towards `target`; `cells` is the edge length in lattice units.
  /// Returns nothing when the optimization diverges.
  virtual std::optional<Trajectory> connect(const JointState& from, const Target& target, double cells) = 0;
  virtual std::optional<Trajectory> warm_start(const Trajectory& prefix, const Trajectory& suffix,
                                               const Target& target) = 0;
  virtual bool valid(const Trajectory& traj) const = 0;
  virtual double dt() const = 0;
};

class OptimizerBackend : public EdgeBackend {
 public:
  OptimizerBackend(ArmModel model, World world, CostWeights weights, SolveSettings settings,
                   ContactConstants constants = {});
  std::optional<Trajectory> connect(const JointState& from, const Target& target, double cells) override;
  std::optional<Trajectory> warm_start(const Trajectory& prefix, const Trajectory& suffix,
                                       const Target& target) override;
  bool valid(const Trajectory& traj) const override;
  double dt() const override { return optimizer_.settings().dt; }
  const TrajectoryOptimizer& optimizer() const { return optimizer_; }
  double max_scale = 4.0;

 private:
  TrajectoryOptimizer optimizer_;
};

/// Edges are straight hops between cell centers costing their Euclidean length; warm starts
/// concatenate. Turns the planner into plain weighted A* over the lattice.
class EuclideanBackend : public EdgeBackend {
 public:
  explicit EuclideanBackend(LatticeSpec spec) : spec_(std::move(spec)) {}
  std::optional<Trajectory> connect(const JointState& from, const Target& target, double cells) override;
  std::optional<Trajectory> warm_start(const Trajectory& prefix, const Trajectory& suffix,
                                       const Target& target) override;
  bool valid(const Trajectory&) const override { return true; }
  double dt() const override { return 1.0; }

 private:
  LatticeSpec spec_;
};

struct SeedPath {
  std::vector<Cell> cells;
  std::vector<double> g;  // path length up to each cell
};

/// Whether the straight joint-space segment stays out of deep collision (or out of contact
/// entirely when contact is disabled), sampled every resolution / 4.
bool segment_is_valid(const ArmModel& model, const World& world, const LatticeSpec& spec, const Vector& a,
                      const Vector& b);

/// Bidirectional RRT from q_start to q_goal, snapped to lattice cells.
std::optional<SeedPath> rrt_connect(const Vector& q_start, const Vector& q_goal, const ArmModel& model,
                                    const World& world, const LatticeSpec& spec, const RrtSettings& settings,
                                    std::uint64_t seed);

struct SearchNode {
  int id = 0;
  Cell cell;
  int generation = 0;
  double g = std::numeric_limits<double>::infinity();
  double h = 0.0;
  bool actual = false;
  int pred = -1;
  Trajectory traj;  // start-rooted when actual, the incoming edge otherwise
  bool has_traj = false;
  bool closed = false;
  bool seed = false;
  bool is_contact = false;
  Vector anchor;
};

struct PlanStats {
  int expansions = 0;
  int lazy_pops = 0;
  int optimizations = 0;  // edge solves from the ancestor walk
  int warm_starts = 0;
  int reused = 0;         // trajectories re-targeted to the cell they reached
  int discarded = 0;      // optimization results thrown away
  int deep_copies = 0;
  bool seeded = false;
  double wall_time = 0.0;
  double connect_time = 0.0;     // s spent in edge solves
  double warm_start_time = 0.0;  // s spent in warm starts
};

/// One line of the search log.
struct SearchEvent {
  enum class Kind { Pop, Evaluate, Expand, Retarget } kind;
  int node = -1;
  double key = 0.0;
  double open_min = 0.0;  // smallest key left in OPEN at that moment (inf when empty)
  bool actual = false;
  double lazy_g = 0.0;
  double actual_g = 0.0;
  int generation = 0;
};

struct PlanResult {
  bool success = false;
  std::string message;
  Trajectory trajectory;
  std::vector<Cell> path;
  PlanStats stats;
  bool constraints_ok = false;
};

class Planner {
 public:
  Planner(ArmModel model, World world, LatticeSpec spec, PlannerConfig config, std::shared_ptr<EdgeBackend> backend);

  PlanResult plan(const JointState& start, const JointState& goal);

  const std::vector<SearchNode>& nodes() const { return nodes_; }
  const std::vector<SearchEvent>& log() const { return log_; }
  const std::optional<SeedPath>& seed_path() const { return seed_; }

 private:
  struct OpenEntry {
    double key;
    double g;
    std::uint64_t seq;
    int id;
    bool operator<(const OpenEntry& o) const;
  };

  double key(const SearchNode& n) const { return n.g + config_.epsilon * n.h; }
  double open_min() const;
  void push(int id);
  void remove(int id);
  int node_for(const Cell& cell, bool create);
  int new_node(const Cell& cell, int generation);
  Target target_for(const SearchNode& n) const;
  JointState state_of(const SearchNode& n) const;
  bool is_start(int id) const { return id == start_id_; }

  struct Edge {
    int ancestor;
    Trajectory traj;
  };
  std::optional<Edge> generate_trajectory(int expanded, const SearchNode& succ);
  /// Makes a start-rooted trajectory the actual solution of `id` (or of the cell it reached).
  /// Returns the node that became actual, or -1.
  int settle(int id, int ancestor, Trajectory full);
  int evaluate_true_cost(int id);
  std::vector<Successor> expand_successors(const SearchNode& n) const;
  bool within_limits(const Vector& q) const;
  bool constraints_hold(const Trajectory& t) const;

  ArmModel model_;
  World world_;
  LatticeSpec spec_;
  PlannerConfig config_;
  std::shared_ptr<EdgeBackend> backend_;

  std::vector<SearchNode> nodes_;
  std::unordered_map<Cell, std::vector<int>, CellHash> by_cell_;
  std::set<OpenEntry> open_;
  std::vector<std::optional<OpenEntry>> open_handle_;
  std::uint64_t seq_ = 0;
  std::vector<SearchEvent> log_;
  std::optional<SeedPath> seed_;
  PlanStats stats_;
  JointState start_, goal_;
  Cell goal_cell_;
  int start_id_ = -1;
};

}  // namespace insat
