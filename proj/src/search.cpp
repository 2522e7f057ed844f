#include "insat/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace insat {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr double kInf = std::numeric_limits<double>::infinity();

bool config_is_valid(const ArmModel& model, const World& world, const Vector& q) {
  return state_is_valid(model, world, JointState::at_rest(q));
}

Trajectory single_state(const JointState& x, double dt) {
  Trajectory t;
  t.dt = dt;
  t.times = {0.0};
  t.states = {x};
  t.total_cost = 0.0;
  t.converged = true;
  return t;
}

}  // namespace

void PlannerConfig::validate() const {
  require(epsilon >= 1.0 && std::isfinite(epsilon), "planner.epsilon must be >= 1");
  require(rrt.max_iterations > 0, "planner.rrt.max_iterations must be positive");
  require(rrt.step_size > 0.0, "planner.rrt.step_size must be positive");
  require(rrt.goal_bias >= 0.0 && rrt.goal_bias <= 1.0, "planner.rrt.goal_bias must lie in [0, 1]");
  require(time_budget > 0.0, "planner.time_budget must be positive");
  require(ancestor_cap >= 1, "planner.ancestor_cap must be >= 1");
  require(deep_copy_cap >= 0, "planner.deep_copy_cap must be >= 0");
  require(max_horizon_scale >= 1.0, "planner.max_horizon_scale must be >= 1");
}

// ---------------------------------------------------------------- backends

OptimizerBackend::OptimizerBackend(ArmModel model, World world, CostWeights weights, SolveSettings settings,
                                   ContactConstants constants)
    : optimizer_(std::move(model), std::move(world), weights, settings, constants) {}

std::optional<Trajectory> OptimizerBackend::connect(const JointState& from, const Target& target, double cells) {
  try {
    const double scale = std::clamp(std::ceil(cells - 1e-9), 1.0, max_scale);
    if (scale == 1.0) return optimizer_.solve(from, target);
    SolveSettings s = optimizer_.settings();
    s.horizon *= scale;
    s.knots = 1 + static_cast<int>(std::lround((s.knots - 1) * scale));
    const TrajectoryOptimizer longer(optimizer_.model(), optimizer_.world(), optimizer_.weights(), s);
    return longer.solve(from, target);
  } catch (const DivergenceError&) {
    return std::nullopt;
  }
}

std::optional<Trajectory> OptimizerBackend::warm_start(const Trajectory& prefix, const Trajectory& suffix,
                                                       const Target& target) {
  try {
    return optimizer_.warm_start(prefix, suffix, target);
  } catch (const DivergenceError&) {
    return std::nullopt;
  }
}

bool OptimizerBackend::valid(const Trajectory& traj) const {
  return trajectory_is_valid(optimizer_.model(), optimizer_.world(), traj);
}

std::optional<Trajectory> EuclideanBackend::connect(const JointState& from, const Target& target, double) {
  const Cell a = lambda(from.q, spec_);
  const Cell b = lambda(target.center, spec_);
  Trajectory t;
  t.dt = 1.0;
  t.times = {0.0, 1.0};
  t.states = {from, lift(b, spec_)};
  t.total_cost = heuristic(a, b, spec_);
  t.converged = true;
  return t;
}

std::optional<Trajectory> EuclideanBackend::warm_start(const Trajectory& prefix, const Trajectory& suffix,
                                                       const Target&) {
  Trajectory t = prefix;
  for (std::size_t i = 1; i < suffix.states.size(); ++i) {
    t.states.push_back(suffix.states[i]);
    t.times.push_back(static_cast<double>(t.times.size()));
  }
  t.total_cost = prefix.total_cost + suffix.total_cost;
  return t;
}

// ---------------------------------------------------------------- seed

bool segment_is_valid(const ArmModel& model, const World& world, const LatticeSpec& spec, const Vector& a,
                      const Vector& b) {
  const double step = spec.resolution / 4.0;
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).cwiseAbs().maxCoeff() / step)));
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    if (!config_is_valid(model, world, (1.0 - s) * a + s * b)) return false;
  }
  return true;
}

namespace {

struct Tree {
  std::vector<Vector> q;
  std::vector<int> parent;

  int nearest(const Vector& x) const {
    int best = 0;
    double d = kInf;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double di = (q[i] - x).squaredNorm();
      if (di < d) {
        d = di;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  std::vector<Vector> branch(int i) const {
    std::vector<Vector> out;
    for (; i >= 0; i = parent[i]) out.push_back(q[i]);
    return out;
  }
};

enum class Extend { Trapped, Advanced, Reached };

}  // namespace

std::optional<SeedPath> rrt_connect(const Vector& q_start, const Vector& q_goal, const ArmModel& model,
                                    const World& world, const LatticeSpec& spec, const RrtSettings& settings,
                                    std::uint64_t seed) {
  if (!config_is_valid(model, world, q_start) || !config_is_valid(model, world, q_goal)) return std::nullopt;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto extend = [&](Tree& t, const Vector& target) {
    const int near = t.nearest(target);
    const Vector d = target - t.q[near];
    const double len = d.norm();
    const bool reaches = len <= settings.step_size;
    const Vector next = reaches ? target : Vector(t.q[near] + d * (settings.step_size / len));
    if (!segment_is_valid(model, world, spec, t.q[near], next)) return Extend::Trapped;
    t.q.push_back(next);
    t.parent.push_back(near);
    return reaches ? Extend::Reached : Extend::Advanced;
  };

  Tree ta{{q_start}, {-1}}, tb{{q_goal}, {-1}};
  bool a_is_start = true;
  std::vector<Vector> route;
  for (int it = 0; it < settings.max_iterations && route.empty(); ++it) {
    Vector sample(spec.dof());
    if (unit(rng) < settings.goal_bias) {
      sample = tb.q.front();
    } else {
      for (int j = 0; j < spec.dof(); ++j) sample[j] = spec.lower[j] + unit(rng) * (spec.upper[j] - spec.lower[j]);
    }
    if (extend(ta, sample) != Extend::Trapped) {
      const Vector& reached = ta.q.back();
      Extend e;
      do e = extend(tb, reached);
      while (e == Extend::Advanced);
      if (e == Extend::Reached) {
        std::vector<Vector> from_a = ta.branch(static_cast<int>(ta.q.size()) - 1);
        std::vector<Vector> from_b = tb.branch(static_cast<int>(tb.q.size()) - 1);
        std::reverse(from_a.begin(), from_a.end());
        from_a.insert(from_a.end(), from_b.begin() + 1, from_b.end());
        if (!a_is_start) std::reverse(from_a.begin(), from_a.end());
        route = std::move(from_a);
      }
    }
    std::swap(ta, tb);
    a_is_start = !a_is_start;
  }
  if (route.empty()) return std::nullopt;

  // Snap to cells, sampling the route finely enough not to skip any.
  SeedPath path;
  std::vector<Vector> rep;  // representative pose per cell
  auto add = [&](const Vector& q) {
    const Cell c = lambda(q, spec);
    if (!path.cells.empty() && path.cells.back() == c) return;
    path.cells.push_back(c);
    rep.push_back(spec.center(c));
  };
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    const Vector& a = route[i];
    const Vector& b = route[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).cwiseAbs().maxCoeff() / (spec.resolution / 4.0))));
    for (int k = 0; k < n; ++k) add(a + (b - a) * (static_cast<double>(k) / n));
  }
  add(route.back());
  rep.front() = q_start;
  if (path.cells.size() > 1) rep.back() = q_goal;
  for (std::size_t i = 0; i < rep.size(); ++i) {
    if (!config_is_valid(model, world, rep[i])) return std::nullopt;
    if (i > 0 && !segment_is_valid(model, world, spec, rep[i - 1], rep[i])) return std::nullopt;
  }
  path.g.push_back(0.0);
  for (std::size_t i = 1; i < path.cells.size(); ++i)
    path.g.push_back(path.g.back() + heuristic(path.cells[i - 1], path.cells[i], spec));
  return path;
}

// ---------------------------------------------------------------- planner

bool Planner::OpenEntry::operator<(const OpenEntry& o) const {
  if (key != o.key) return key < o.key;
  if (g != o.g) return g > o.g;
  return seq < o.seq;
}

Planner::Planner(ArmModel model, World world, LatticeSpec spec, PlannerConfig config,
                 std::shared_ptr<EdgeBackend> backend)
    : model_(std::move(model)), world_(std::move(world)), spec_(std::move(spec)), config_(config),
      backend_(std::move(backend)) {
  model_.validate();
  world_.validate(model_);
  spec_.validate();
  config_.validate();
  require(spec_.dof() == model_.dof(), "planner: lattice and model disagree on the number of joints");
  require(backend_ != nullptr, "planner: an edge backend is required");
}

double Planner::open_min() const { return open_.empty() ? kInf : open_.begin()->key; }

void Planner::push(int id) {
  remove(id);
  const SearchNode& n = nodes_[id];
  const OpenEntry e{key(n), n.g, seq_++, id};
  open_.insert(e);
  open_handle_[id] = e;
}

void Planner::remove(int id) {
  if (open_handle_[id]) {
    open_.erase(*open_handle_[id]);
    open_handle_[id].reset();
  }
}

int Planner::new_node(const Cell& cell, int generation) {
  SearchNode n;
  n.id = static_cast<int>(nodes_.size());
  n.cell = cell;
  n.generation = generation;
  n.h = heuristic(cell, goal_cell_, spec_);
  n.anchor = spec_.center(cell);
  nodes_.push_back(std::move(n));
  open_handle_.emplace_back();
  by_cell_[cell].push_back(nodes_.back().id);
  return nodes_.back().id;
}

int Planner::node_for(const Cell& cell, bool create) {
  const auto it = by_cell_.find(cell);
  if (it != by_cell_.end()) return it->second.back();
  return create ? new_node(cell, 0) : -1;
}

Target Planner::target_for(const SearchNode& n) const {
  Target t;
  t.center = spec_.center(n.cell);
  t.q = n.cell == goal_cell_ ? goal_.q : n.anchor;
  t.half_width = spec_.resolution / 2.0;
  return t;
}

JointState Planner::state_of(const SearchNode& n) const {
  return n.id == start_id_ ? start_ : n.traj.terminal_state();
}

bool Planner::within_limits(const Vector& q) const {
  return q.allFinite() && (q.array() >= spec_.lower.array()).all() && (q.array() <= spec_.upper.array()).all();
}

std::vector<Successor> Planner::expand_successors(const SearchNode& n) const {
  std::vector<Successor> out = successors(n.cell, model_, world_, spec_);
  // the goal cell's center may sit inside an obstacle; the goal pose itself is known valid
  if (heuristic(n.cell, goal_cell_, spec_) == spec_.resolution &&
      std::none_of(out.begin(), out.end(), [&](const Successor& s) { return s.cell == goal_cell_; }))
    out.push_back({goal_cell_, classify(model_, world_, JointState::at_rest(goal_.q)) == Region::Surface, goal_.q});
  if (!seed_) return out;
  const Vector from = n.id == start_id_ ? start_.q : spec_.center(n.cell);
  // the seed node furthest along the path that is directly reachable
  for (auto it = seed_->cells.rbegin(); it != seed_->cells.rend(); ++it) {
    if (*it == n.cell) break;
    const Vector to = *it == goal_cell_ ? goal_.q : spec_.center(*it);
    if (!segment_is_valid(model_, world_, spec_, from, to)) continue;
    if (std::none_of(out.begin(), out.end(), [&](const Successor& s) { return s.cell == *it; }))
      out.push_back({*it, false, spec_.center(*it)});
    break;
  }
  return out;
}

std::optional<Planner::Edge> Planner::generate_trajectory(int expanded, const SearchNode& succ) {
  const Target target = target_for(succ);
  int a = expanded;
  for (int count = 0; a >= 0 && count < config_.ancestor_cap; ++count, a = nodes_[a].pred) {
    const SearchNode& anc = nodes_[a];
    ++stats_.optimizations;
    const auto t0 = Clock::now();
    std::optional<Trajectory> phi =
        backend_->connect(state_of(anc), target, heuristic(anc.cell, succ.cell, spec_) / spec_.resolution);
    stats_.connect_time += since(t0);
    if (!phi || !backend_->valid(*phi) || !within_limits(phi->terminal_state().q)) {
      ++stats_.discarded;
      continue;
    }
    if (lambda(phi->terminal_state().q, spec_) != succ.cell && !config_.reuse_enabled) {
      ++stats_.discarded;
      continue;
    }
    return Edge{a, std::move(*phi)};
  }
  return std::nullopt;
}

int Planner::settle(int id, int ancestor, Trajectory full) {
  auto drop = [&] {
    ++stats_.discarded;
    if (!nodes_[id].actual) {
      remove(id);
      nodes_[id].g = kInf;
      nodes_[id].has_traj = false;
    }
    return -1;
  };
  if (!backend_->valid(full) || !within_limits(full.terminal_state().q)) return drop();
  const Cell landed = lambda(full.terminal_state().q, spec_);
  int target = id;
  if (landed != nodes_[id].cell) {
    if (!config_.reuse_enabled || landed == nodes_[ancestor].cell || !spec_.contains(landed)) return drop();
    const int other = node_for(landed, true);
    if (nodes_[other].closed) return drop();
    if (nodes_[other].has_traj && nodes_[other].actual && nodes_[other].g <= full.total_cost) return drop();
    ++stats_.reused;
    log_.push_back({SearchEvent::Kind::Retarget, other, 0.0, open_min(), true, nodes_[id].g, full.total_cost,
                    nodes_[other].generation});
    if (!nodes_[id].actual) {
      remove(id);
      nodes_[id].g = kInf;
      nodes_[id].has_traj = false;
    }
    target = other;
  }
  SearchNode& n = nodes_[target];
  n.pred = ancestor;
  n.g = full.total_cost;
  n.traj = std::move(full);
  n.has_traj = true;
  n.actual = true;
  push(target);
  return target;
}

int Planner::evaluate_true_cost(int id) {
  SearchNode& n = nodes_[id];
  const int anc = n.pred;
  ++stats_.warm_starts;
  const auto t0 = Clock::now();
  std::optional<Trajectory> full = backend_->warm_start(nodes_[anc].traj, n.traj, target_for(n));
  stats_.warm_start_time += since(t0);
  if (!full) {
    ++stats_.discarded;
    n.g = kInf;
    n.has_traj = false;
    return -1;
  }
  log_.push_back({SearchEvent::Kind::Evaluate, id, 0.0, open_min(), true, n.g, full->total_cost, n.generation});
  return settle(id, anc, std::move(*full));
}

bool Planner::constraints_hold(const Trajectory& t) const {
  if (t.empty() || !state_is_valid(model_, world_, t.initial_state())) return false;
  if (!backend_->valid(t)) return false;
  if (lambda(t.terminal_state().q, spec_) != goal_cell_) return false;
  if (t.controls.knot_values.empty()) return true;
  for (int i = 0; i < t.steps(); ++i)
    if ((t.control_at(i).cwiseAbs().array() > model_.torque_limits.array()).any()) return false;
  return true;
}

PlanResult Planner::plan(const JointState& start, const JointState& goal) {
  const auto t0 = Clock::now();
  nodes_.clear();
  by_cell_.clear();
  open_.clear();
  open_handle_.clear();
  log_.clear();
  seed_.reset();
  stats_ = {};
  seq_ = 0;
  start_ = start;
  goal_ = goal;

  PlanResult result;
  auto finish = [&](bool ok, std::string message) {
    result.success = ok;
    result.message = std::move(message);
    result.stats = stats_;
    result.stats.wall_time = since(t0);
    return result;
  };

  require(start.dof() == model_.dof() && goal.dof() == model_.dof(), "plan: start and goal need one entry per joint");
  if (!within_limits(start.q) || !within_limits(goal.q)) return finish(false, "start or goal outside the joint limits");
  if (!state_is_valid(model_, world_, start)) return finish(false, "start state is in collision or over limits");
  if (!state_is_valid(model_, world_, JointState::at_rest(goal.q)))
    return finish(false, "goal configuration is in collision");
  if (!statically_admissible(model_, start.q) && !bracing_available(model_, world_, start))
    return finish(false, "start cannot be held against gravity");

  goal_cell_ = lambda(goal.q, spec_);
  start_id_ = new_node(lambda(start.q, spec_), 0);
  SearchNode& s = nodes_[start_id_];
  s.g = 0.0;
  s.actual = true;
  s.has_traj = true;
  s.traj = single_state(start, backend_->dt());

  if (s.cell == goal_cell_) {
    result.trajectory = s.traj;
    result.path = {s.cell};
    result.constraints_ok = true;
    return finish(true, "start already in the goal cell");
  }

  if (config_.seed_enabled) {
    seed_ = rrt_connect(start.q, goal.q, model_, world_, spec_, config_.rrt, config_.seed);
    stats_.seeded = seed_.has_value();
    if (seed_) {
      for (std::size_t i = 1; i < seed_->cells.size(); ++i) {
        const int id = node_for(seed_->cells[i], true);
        nodes_[id].seed = true;
        nodes_[id].g = seed_->g[i];
        push(id);
      }
    }
  }
  push(start_id_);

  while (!open_.empty()) {
    if (since(t0) > config_.time_budget)
      return finish(false, "time budget exhausted");
    const OpenEntry top = *open_.begin();
    open_.erase(open_.begin());
    open_handle_[top.id].reset();
    int id = top.id;
    log_.push_back({SearchEvent::Kind::Pop, id, top.key, open_min(), nodes_[id].actual, 0.0, 0.0,
                    nodes_[id].generation});
    if (!nodes_[id].has_traj) {
      // seed placeholder never reached by an edge
      nodes_[id].g = kInf;
      continue;
    }
    if (!nodes_[id].actual) {
      ++stats_.lazy_pops;
      id = evaluate_true_cost(id);
      if (id < 0) continue;
      // expand right away only if it is still the best entry
      if (open_.begin()->id != id) continue;
      open_.erase(open_.begin());
      open_handle_[id].reset();
    }

    SearchNode& x = nodes_[id];
    if (x.cell == goal_cell_) {
      result.trajectory = x.traj;
      for (int a = id; a >= 0; a = nodes_[a].pred) result.path.push_back(nodes_[a].cell);
      std::reverse(result.path.begin(), result.path.end());
      result.constraints_ok = constraints_hold(result.trajectory);
      return finish(true, "goal reached");
    }
    x.closed = true;
    ++stats_.expansions;
    log_.push_back({SearchEvent::Kind::Expand, id, key(x), open_min(), x.actual, 0.0, x.g, x.generation});

    const std::vector<Successor> succs = expand_successors(nodes_[id]);
    for (const Successor& sc : succs) {
      int nid = node_for(sc.cell, true);
      const bool reopen = nodes_[nid].closed;
      if (reopen && nodes_[nid].generation >= config_.deep_copy_cap) continue;
      if (!reopen && nodes_[nid].actual && nodes_[nid].has_traj) continue;
      nodes_[nid].is_contact = sc.is_contact;
      if (!reopen) nodes_[nid].anchor = sc.anchor;
      SearchNode probe = nodes_[nid];
      probe.anchor = sc.anchor;
      std::optional<Edge> edge = generate_trajectory(id, probe);
      if (!edge) continue;
      const double candidate = nodes_[edge->ancestor].g + edge->traj.total_cost;
      const double current = nodes_[nid].has_traj ? nodes_[nid].g : kInf;
      if (!(candidate < current)) continue;
      if (reopen) {
        nid = new_node(sc.cell, nodes_[nid].generation + 1);
        nodes_[nid].anchor = sc.anchor;
        nodes_[nid].is_contact = sc.is_contact;
        ++stats_.deep_copies;
      }
      if (is_start(edge->ancestor)) {
        settle(nid, edge->ancestor, std::move(edge->traj));
      } else if (!config_.lazy_enabled) {
        ++stats_.warm_starts;
        const auto t0 = Clock::now();
        std::optional<Trajectory> full =
            backend_->warm_start(nodes_[edge->ancestor].traj, edge->traj, target_for(nodes_[nid]));
        stats_.warm_start_time += since(t0);
        if (!full) {
          ++stats_.discarded;
          continue;
        }
        settle(nid, edge->ancestor, std::move(*full));
      } else {
        SearchNode& n = nodes_[nid];
        n.pred = edge->ancestor;
        n.traj = std::move(edge->traj);
        n.has_traj = true;
        n.actual = false;
        n.g = candidate;
        push(nid);
      }
    }
  }
  return finish(false, "search space exhausted");
}

}  // namespace insat
