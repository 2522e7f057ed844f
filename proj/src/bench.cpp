#include "insat/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "insat/dynamics.hpp"

namespace insat {
namespace {

using json = nlohmann::ordered_json;

// Tracks which keys of one JSON object were consumed, so leftovers can be reported.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), (path_.empty() ? std::string("scenario") : path_) + ": expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    require(has(key), sub(key) + ": required field is missing");
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (has(key)) out = convert(at(key), sub(key), out);
  }

  void finish() const {
    for (const auto& item : j_.items())
      require(used_.count(item.key()) > 0, "unknown key '" + sub(item.key()) + "'");
  }

  static double convert(const json& j, const std::string& p, double) {
    require(j.is_number(), p + ": expected a number");
    return j.get<double>();
  }
  static int convert(const json& j, const std::string& p, int) {
    require(j.is_number_integer(), p + ": expected an integer");
    return j.get<int>();
  }
  static std::uint64_t convert(const json& j, const std::string& p, std::uint64_t) {
    require(j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0),
            p + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
  }
  static bool convert(const json& j, const std::string& p, bool) {
    require(j.is_boolean(), p + ": expected true or false");
    return j.get<bool>();
  }
  static std::string convert(const json& j, const std::string& p, const std::string&) {
    require(j.is_string(), p + ": expected a string");
    return j.get<std::string>();
  }
  static Vector convert(const json& j, const std::string& p, const Vector&) {
    require(j.is_array(), p + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
      require(j[i].is_number(), p + "[" + std::to_string(i) + "]: expected a number");
      v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
  }
  static Vec2 convert(const json& j, const std::string& p, const Vec2&) {
    const Vector v = convert(j, p, Vector());
    require(v.size() == 2, p + ": expected [x, y]");
    return {v[0], v[1]};
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}
json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

template <class E>
E parse_enum(const std::string& text, const std::string& path, std::initializer_list<std::pair<const char*, E>> names) {
  std::string options;
  for (const auto& [name, value] : names) {
    if (text == name) return value;
    options += options.empty() ? name : std::string(", ") + name;
  }
  throw ContractViolation(path + ": expected one of " + options + ", got '" + text + "'");
}

template <class E>
std::string enum_name(E value, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return "";
}

const std::initializer_list<std::pair<const char*, MassModel>> kMassModels = {
    {"uniform_rod", MassModel::UniformRod}, {"point_mass", MassModel::PointMass}};
const std::initializer_list<std::pair<const char*, NormKind>> kNorms = {{"euclidean", NormKind::Euclidean},
                                                                        {"quadratic", NormKind::Quadratic}};
const std::initializer_list<std::pair<const char*, Interpolation>> kInterpolations = {
    {"zero_order", Interpolation::ZeroOrder}, {"linear", Interpolation::Linear}, {"cubic", Interpolation::Cubic}};

ArmModel parse_arm(const json& j) {
  Fields f(j, "arm");
  Vector lengths, masses;
  f.at("link_lengths");
  f.get("link_lengths", lengths);
  f.get("link_masses", masses);
  require(lengths.size() >= 1, "arm.link_lengths: at least one link is required");
  const int n = static_cast<int>(lengths.size());
  ArmModel m = ArmModel::uniform(n, 1.0, 1.0);
  m.link_lengths = lengths;
  require(f.has("link_masses"), "arm.link_masses: required field is missing");
  m.link_masses = masses;
  m.link_com_offsets = 0.5 * lengths;
  f.get("link_com_offsets", m.link_com_offsets);
  std::string mass_model = enum_name(m.mass_model, kMassModels);
  f.get("mass_model", mass_model);
  m.mass_model = parse_enum(mass_model, "arm.mass_model", kMassModels);
  f.get("gravity", m.gravity);
  f.get("base_position", m.base_position);
  f.get("base_angle", m.base_angle);
  f.get("joint_damping", m.joint_damping);
  f.get("torque_limits", m.torque_limits);
  f.get("velocity_limits", m.velocity_limits);
  f.get("acceleration_limits", m.acceleration_limits);
  f.get("joint_lower", m.joint_lower);
  f.get("joint_upper", m.joint_upper);
  f.get("payload_mass", m.payload_mass);
  f.get("link_radius", m.link_radius);
  f.get("payload_radius", m.payload_radius);
  f.finish();
  m.validate();
  return m;
}

World parse_world(const json& j, const ArmModel& arm) {
  Fields f(j, "world");
  World w;
  if (f.has("obstacles")) {
    const json& obs = f.at("obstacles");
    require(obs.is_array(), "world.obstacles: expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string p = "world.obstacles[" + std::to_string(i) + "]";
      Fields o(obs[i], p);
      Polygon poly;
      if (o.has("box")) {
        Fields b(o.at("box"), p + ".box");
        Vec2 lo = Vec2::Zero(), hi = Vec2::Zero();
        b.at("min");
        b.at("max");
        b.get("min", lo);
        b.get("max", hi);
        b.finish();
        require((hi.array() > lo.array()).all(), p + ".box: max must exceed min in x and y");
        poly = Polygon::box(lo, hi);
      } else {
        const json& vs = o.at("vertices");
        require(vs.is_array(), p + ".vertices: expected an array of [x, y]");
        for (std::size_t k = 0; k < vs.size(); ++k)
          poly.vertices.push_back(Fields::convert(vs[k], p + ".vertices[" + std::to_string(k) + "]", Vec2()));
      }
      o.finish();
      try {
        poly.validate();
      } catch (const ContractViolation& e) {
        throw ContractViolation(p + ": " + e.what());
      }
      w.obstacles.push_back(std::move(poly));
    }
  }
  f.get("surface_band", w.surface_band);
  if (f.has("contact_pairs")) {
    const json& cp = f.at("contact_pairs");
    if (cp.is_string()) {
      require(cp.get<std::string>() == "all", "world.contact_pairs: expected a list or \"all\"");
      w.contact_pairs = World::all_pairs(arm, w.obstacles.size());
    } else {
      require(cp.is_array(), "world.contact_pairs: expected a list or \"all\"");
      for (std::size_t i = 0; i < cp.size(); ++i) {
        Fields pf(cp[i], "world.contact_pairs[" + std::to_string(i) + "]");
        ContactPair pair;
        pf.at("body");
        pf.at("obstacle");
        pf.get("body", pair.body);
        pf.get("obstacle", pair.obstacle);
        pf.finish();
        w.contact_pairs.push_back(pair);
      }
    }
  }
  if (f.has("surface")) {
    Fields s(f.at("surface"), "world.surface");
    s.get("stiffness", w.surface.stiffness);
    s.get("damping", w.surface.damping);
    s.get("stick_velocity", w.surface.stick_velocity);
    s.finish();
  }
  f.get("contact_enabled", w.contact_enabled);
  f.finish();
  w.validate(arm);
  return w;
}

JointState parse_state(const json& j, const std::string& path, int n) {
  Fields f(j, path);
  JointState x{Vector::Zero(n), Vector::Zero(n)};
  f.at("q");
  f.get("q", x.q);
  f.get("qdot", x.qdot);
  f.finish();
  require(x.q.size() == n, path + ".q: expected " + std::to_string(n) + " entries");
  require(x.qdot.size() == n, path + ".qdot: expected " + std::to_string(n) + " entries");
  require(x.finite(), path + ": entries must be finite");
  return x;
}

CostWeights parse_weights(const json& j) {
  Fields f(j, "weights");
  CostWeights w;
  f.get("w1", w.w1);
  f.get("w2", w.w2);
  f.get("w3", w.w3);
  f.get("w4", w.w4);
  f.get("w5", w.w5);
  f.get("w6", w.w6);
  f.get("R", w.R);
  std::string norm = enum_name(w.norm, kNorms);
  f.get("norm", norm);
  w.norm = parse_enum(norm, "weights.norm", kNorms);
  f.get("epsilon", w.epsilon);
  f.finish();
  w.validate();
  return w;
}

ContactConstants parse_contact(const json& j) {
  Fields f(j, "contact");
  ContactConstants c;
  f.get("alpha_k", c.alpha_k);
  f.get("alpha_b", c.alpha_b);
  f.get("mu_s", c.mu_s);
  f.get("mu_k", c.mu_k);
  f.get("psidot_thres", c.psidot_thres);
  f.get("rho", c.rho);
  f.finish();
  c.validate();
  return c;
}

SolveSettings parse_trajopt(const json& j) {
  Fields f(j, "trajopt");
  SolveSettings s;
  f.get("dt", s.dt);
  f.get("horizon", s.horizon);
  f.get("knots", s.knots);
  std::string interp = enum_name(s.interpolation, kInterpolations);
  f.get("interpolation", interp);
  s.interpolation = parse_enum(interp, "trajopt.interpolation", kInterpolations);
  f.get("max_iterations", s.max_iterations);
  f.get("alpha_min", s.alpha_min);
  f.get("reg_init", s.reg_init);
  f.get("reg_min", s.reg_min);
  f.get("reg_max", s.reg_max);
  f.get("reg_increase", s.reg_increase);
  f.get("reg_decrease", s.reg_decrease);
  f.get("tolerance", s.tolerance);
  f.get("outer_iterations", s.outer_iterations);
  f.get("contact_sweeps", s.contact_sweeps);
  f.get("golden_iterations", s.golden_iterations);
  f.get("k_max", s.k_max);
  f.get("b_max", s.b_max);
  f.get("mu_max", s.mu_max);
  f.get("active_gap", s.active_gap);
  f.get("fd_step", s.fd_step);
  f.finish();
  require(s.interpolation != Interpolation::Cubic, "trajopt.interpolation: the optimizer supports zero_order and linear");
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    std::string what = e.what();
    if (what.rfind("settings", 0) == 0) what.replace(0, 8, "trajopt");
    throw ContractViolation(what);
  }
  return s;
}

PlannerConfig parse_planner(const json& j) {
  Fields f(j, "planner");
  PlannerConfig c;
  f.get("epsilon", c.epsilon);
  if (f.has("rrt")) {
    Fields r(f.at("rrt"), "planner.rrt");
    r.get("max_iterations", c.rrt.max_iterations);
    r.get("step_size", c.rrt.step_size);
    r.get("goal_bias", c.rrt.goal_bias);
    r.finish();
  }
  f.get("seed_enabled", c.seed_enabled);
  f.get("lazy_enabled", c.lazy_enabled);
  f.get("reuse_enabled", c.reuse_enabled);
  f.get("time_budget", c.time_budget);
  f.get("ancestor_cap", c.ancestor_cap);
  f.get("deep_copy_cap", c.deep_copy_cap);
  f.get("max_horizon_scale", c.max_horizon_scale);
  f.finish();
  c.validate();
  return c;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("scenario: malformed JSON: ") + e.what());
  }
  Fields f(j, "");
  int version = 0;
  f.at("schema_version");
  f.get("schema_version", version);
  require(version == kScenarioSchemaVersion,
          "schema_version: unsupported version " + std::to_string(version) + " (expected " +
              std::to_string(kScenarioSchemaVersion) + ")");
  Scenario s;
  f.get("name", s.name);
  s.arm = parse_arm(f.at("arm"));
  s.world = f.has("world") ? parse_world(f.at("world"), s.arm) : World{};
  s.start = parse_state(f.at("start"), "start", s.arm.dof());
  s.goal = parse_state(f.at("goal"), "goal", s.arm.dof());
  if (f.has("weights")) s.weights = parse_weights(f.at("weights"));
  if (f.has("contact")) s.contact = parse_contact(f.at("contact"));
  if (f.has("lattice")) {
    Fields l(f.at("lattice"), "lattice");
    l.get("resolution", s.resolution);
    l.finish();
  }
  if (f.has("trajopt")) s.trajopt = parse_trajopt(f.at("trajopt"));
  if (f.has("planner")) s.planner = parse_planner(f.at("planner"));
  f.get("seed", s.planner.seed);
  f.finish();
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "scenario: cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void validate_structure(const Scenario& s) {
  s.arm.validate();
  s.world.validate(s.arm);
  s.weights.validate();
  s.contact.validate();
  s.trajopt.validate();
  s.planner.validate();
  require(s.resolution > 0.0 && std::isfinite(s.resolution), "lattice.resolution must be positive");
  const int n = s.arm.dof();
  require(s.start.dof() == n && s.goal.dof() == n, "start/goal: expected one entry per joint");
  auto inside = [&](const Vector& q) {
    return (q.array() >= s.arm.joint_lower.array()).all() && (q.array() <= s.arm.joint_upper.array()).all();
  };
  require(inside(s.start.q), "start.q: outside the joint limits");
  require(inside(s.goal.q), "goal.q: outside the joint limits");
}

void validate_scenario(const Scenario& s) {
  validate_structure(s);
  require(state_is_valid(s.arm, s.world, s.start), "start: state is in collision or over the velocity limits");
  require(state_is_valid(s.arm, s.world, JointState::at_rest(s.goal.q)), "goal.q: configuration is in collision");
  require(statically_admissible(s.arm, s.start.q) || bracing_available(s.arm, s.world, s.start),
          "start.q: gravity load exceeds the torque limits and nothing is within reach to brace on");
}

std::string dump_scenario(const Scenario& s) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  const ArmModel& m = s.arm;
  j["arm"] = {{"link_lengths", to_json(m.link_lengths)},
              {"link_masses", to_json(m.link_masses)},
              {"link_com_offsets", to_json(m.link_com_offsets)},
              {"mass_model", enum_name(m.mass_model, kMassModels)},
              {"gravity", to_json(m.gravity)},
              {"base_position", to_json(m.base_position)},
              {"base_angle", m.base_angle},
              {"joint_damping", to_json(m.joint_damping)},
              {"torque_limits", to_json(m.torque_limits)},
              {"velocity_limits", to_json(m.velocity_limits)},
              {"acceleration_limits", to_json(m.acceleration_limits)},
              {"joint_lower", to_json(m.joint_lower)},
              {"joint_upper", to_json(m.joint_upper)},
              {"payload_mass", m.payload_mass},
              {"link_radius", m.link_radius},
              {"payload_radius", m.payload_radius}};
  json obstacles = json::array();
  for (const Polygon& p : s.world.obstacles) {
    json vs = json::array();
    for (const Vec2& v : p.vertices) vs.push_back(to_json(v));
    obstacles.push_back({{"vertices", vs}});
  }
  json pairs = json::array();
  for (const ContactPair& p : s.world.contact_pairs) pairs.push_back({{"body", p.body}, {"obstacle", p.obstacle}});
  j["world"] = {{"obstacles", obstacles},
                {"surface_band", s.world.surface_band},
                {"contact_pairs", pairs},
                {"surface",
                 {{"stiffness", s.world.surface.stiffness},
                  {"damping", s.world.surface.damping},
                  {"stick_velocity", s.world.surface.stick_velocity}}},
                {"contact_enabled", s.world.contact_enabled}};
  j["start"] = {{"q", to_json(s.start.q)}, {"qdot", to_json(s.start.qdot)}};
  j["goal"] = {{"q", to_json(s.goal.q)}, {"qdot", to_json(s.goal.qdot)}};
  const CostWeights& w = s.weights;
  j["weights"] = {{"w1", w.w1}, {"w2", w.w2}, {"w3", w.w3}, {"w4", w.w4},         {"w5", w.w5},
                  {"w6", w.w6}, {"R", w.R},   {"norm", enum_name(w.norm, kNorms)}, {"epsilon", w.epsilon}};
  const ContactConstants& c = s.contact;
  j["contact"] = {{"alpha_k", c.alpha_k}, {"alpha_b", c.alpha_b},           {"mu_s", c.mu_s},
                  {"mu_k", c.mu_k},       {"psidot_thres", c.psidot_thres}, {"rho", c.rho}};
  j["lattice"] = {{"resolution", s.resolution}};
  const SolveSettings& t = s.trajopt;
  j["trajopt"] = {{"dt", t.dt},
                  {"horizon", t.horizon},
                  {"knots", t.knots},
                  {"interpolation", enum_name(t.interpolation, kInterpolations)},
                  {"max_iterations", t.max_iterations},
                  {"alpha_min", t.alpha_min},
                  {"reg_init", t.reg_init},
                  {"reg_min", t.reg_min},
                  {"reg_max", t.reg_max},
                  {"reg_increase", t.reg_increase},
                  {"reg_decrease", t.reg_decrease},
                  {"tolerance", t.tolerance},
                  {"outer_iterations", t.outer_iterations},
                  {"contact_sweeps", t.contact_sweeps},
                  {"golden_iterations", t.golden_iterations},
                  {"k_max", t.k_max},
                  {"b_max", t.b_max},
                  {"mu_max", t.mu_max},
                  {"active_gap", t.active_gap},
                  {"fd_step", t.fd_step}};
  const PlannerConfig& p = s.planner;
  j["planner"] = {{"epsilon", p.epsilon},
                  {"rrt",
                   {{"max_iterations", p.rrt.max_iterations},
                    {"step_size", p.rrt.step_size},
                    {"goal_bias", p.rrt.goal_bias}}},
                  {"seed_enabled", p.seed_enabled},
                  {"lazy_enabled", p.lazy_enabled},
                  {"reuse_enabled", p.reuse_enabled},
                  {"time_budget", p.time_budget},
                  {"ancestor_cap", p.ancestor_cap},
                  {"deep_copy_cap", p.deep_copy_cap},
                  {"max_horizon_scale", p.max_horizon_scale}};
  j["seed"] = p.seed;
  return j.dump(2) + "\n";
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), "scenario: cannot write '" + path.string() + "'");
  out << dump_scenario(s);
  require(out.good(), "scenario: write to '" + path.string() + "' failed");
}

void disable_contact(Scenario& s) {
  s.world.contact_enabled = false;
  s.world.contact_pairs.clear();
}

TorqueSeries compute_trr(const Trajectory& traj, const ArmModel& model, const World& world) {
  require(!traj.empty(), "compute_trr: empty trajectory");
  TorqueSeries out;
  const ContactParams params = traj.contact_params.pair_count() == static_cast<int>(world.contact_pairs.size())
                                   ? traj.contact_params
                                   : ContactParams::zeros(static_cast<int>(world.contact_pairs.size()));
  double nc = 0.0, nwo = 0.0;
  for (int i = 0; i <= traj.steps(); ++i) {
    const JointState& x = traj.states[i];
    Vector qddot = Vector::Zero(model.dof());
    std::vector<HardContact> hard;
    if (!traj.controls.knot_values.empty()) {
      const StepDetail d = step_detailed(model, world, params, x, traj.controls.evaluate(traj.times[i]), traj.dt);
      qddot = d.qddot;
      hard = d.hard;
    } else {
      hard = hard_contact_forces(model, world, params.constants, x, query_all(model, world, x));
    }
    std::vector<PointForce> external;
    for (const HardContact& h : hard) external.push_back({h.query.body, h.query.witness, h.force()});
    out.tau_c.push_back(inverse_dynamics(model, x.q, x.qdot, qddot, external));
    out.tau_wo.push_back(inverse_dynamics(model, x.q, x.qdot, qddot));
    nc += out.tau_c.back().squaredNorm();
    nwo += out.tau_wo.back().squaredNorm();
  }
  nc = std::sqrt(nc);
  nwo = std::sqrt(nwo);
  require(nc > 1e-9, "compute_trr: net torque is numerically zero along the trajectory, ratio undefined");
  out.trr = (nwo - nc) / nc;
  return out;
}

RunReport make_report(const PlanResult& result, const Scenario& s, TorqueSeries* torques) {
  RunReport r;
  r.success = result.success;
  r.message = result.message;
  r.stats = result.stats;
  if (!result.success) return r;
  const Trajectory& t = result.trajectory;
  const ArmModel& m = s.arm;
  const int n = m.dof();
  r.samples = static_cast<int>(t.states.size());
  r.duration = t.steps() * t.dt;
  r.total_cost = t.total_cost;

  TorqueSeries local;
  TorqueSeries& ts = torques ? *torques : local;
  try {
    ts = compute_trr(t, m, s.world);
    r.trr = ts.trr;
    r.trr_defined = true;
  } catch (const ContractViolation&) {
    ts = {};
  }
  r.rms_tau_contact = Vector::Zero(n);
  r.rms_tau_free = Vector::Zero(n);
  for (std::size_t i = 0; i < ts.tau_c.size(); ++i) {
    r.rms_tau_contact += ts.tau_c[i].cwiseAbs2();
    r.rms_tau_free += ts.tau_wo[i].cwiseAbs2();
  }
  if (!ts.tau_c.empty()) {
    r.rms_tau_contact = (r.rms_tau_contact / static_cast<double>(ts.tau_c.size())).cwiseSqrt();
    r.rms_tau_free = (r.rms_tau_free / static_cast<double>(ts.tau_wo.size())).cwiseSqrt();
  }

  const LatticeSpec spec = LatticeSpec::from_model(m, s.resolution);
  for (int i = 0; i <= t.steps(); ++i) {
    const JointState& x = t.states[i];
    if (!t.controls.knot_values.empty()) {
      const Vector u = t.controls.evaluate(t.times[i]);
      r.max_abs_u = std::max(r.max_abs_u, u.cwiseAbs().maxCoeff());
      if ((u.cwiseAbs().array() > m.torque_limits.array()).any()) r.torque_violation = true;
    }
    if ((x.qdot.cwiseAbs().array() > m.velocity_limits.array()).any()) r.velocity_violation = true;
    if (!state_is_valid(m, s.world, x)) r.collision_violation = true;
    if (classify(m, s.world, x) == Region::Surface) ++r.contact_samples;
  }
  r.goal_missed = lambda(t.terminal_state().q, spec) != lambda(s.goal.q, spec);
  return r;
}

RunOutput run_scenario(const Scenario& s) {
  validate_structure(s);
  RunOutput out;
  out.scenario = s;
  auto backend = std::make_shared<OptimizerBackend>(s.arm, s.world, s.weights, s.trajopt, s.contact);
  backend->max_scale = s.planner.max_horizon_scale;
  Planner planner(s.arm, s.world, LatticeSpec::from_model(s.arm, s.resolution), s.planner, backend);
  out.result = planner.plan(s.start, s.goal);
  out.report = make_report(out.result, s, &out.torques);
  return out;
}

std::string report_json(const RunReport& r, const Scenario& s) {
  json j;
  j["scenario"] = s.name;
  j["success"] = r.success;
  j["message"] = r.message;
  j["wall_time"] = r.stats.wall_time;
  j["stats"] = {{"expansions", r.stats.expansions},   {"lazy_pops", r.stats.lazy_pops},
                {"optimizations", r.stats.optimizations}, {"warm_starts", r.stats.warm_starts},
                {"reused", r.stats.reused},           {"discarded", r.stats.discarded},
                {"deep_copies", r.stats.deep_copies}, {"seeded", r.stats.seeded},
                {"connect_time", r.stats.connect_time}, {"warm_start_time", r.stats.warm_start_time}};
  if (r.success) {
    j["samples"] = r.samples;
    j["duration"] = r.duration;
    j["total_cost"] = r.total_cost;
    j["rms_tau_contact"] = to_json(r.rms_tau_contact);
    j["rms_tau_free"] = to_json(r.rms_tau_free);
    j["trr"] = r.trr_defined ? json(r.trr) : json(nullptr);
    j["max_abs_u"] = r.max_abs_u;
    j["contact_samples"] = r.contact_samples;
    j["violations"] = {{"torque", r.torque_violation},
                       {"velocity", r.velocity_violation},
                       {"collision", r.collision_violation},
                       {"goal_missed", r.goal_missed}};
  }
  return j.dump(2) + "\n";
}

void export_run(const RunOutput& run, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, "export: cannot create '" + out_dir.string() + "': " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name);
    require(f.good(), "export: cannot write '" + (out_dir / name).string() + "'");
    return f;
  };
  {
    std::ofstream f = open("report.json");
    f << report_json(run.report, run.scenario);
  }
  if (!run.result.success) return;

  const Scenario& s = run.scenario;
  const Trajectory& t = run.result.trajectory;
  const int n = s.arm.dof();
  const int pairs = static_cast<int>(s.world.contact_pairs.size());
  const bool has_controls = !t.controls.knot_values.empty();
  const ContactParams params =
      t.contact_params.pair_count() == pairs ? t.contact_params : ContactParams::zeros(pairs);

  std::ofstream f = open("trajectory.csv");
  f << "t";
  for (int j = 0; j < n; ++j) f << ",q" << j;
  for (int j = 0; j < n; ++j) f << ",qdot" << j;
  for (int j = 0; j < n; ++j) f << ",u" << j;
  for (int p = 0; p < pairs; ++p) f << ",psi" << p << ",contact_force" << p << ",virtual_force" << p;
  f << "\n";
  for (int i = 0; i <= t.steps(); ++i) {
    const JointState& x = t.states[i];
    const Vector u = has_controls ? t.controls.evaluate(t.times[i]) : Vector::Zero(n);
    f << fmt(t.times[i]);
    for (int j = 0; j < n; ++j) f << "," << fmt(x.q[j]);
    for (int j = 0; j < n; ++j) f << "," << fmt(x.qdot[j]);
    for (int j = 0; j < n; ++j) f << "," << fmt(u[j]);
    if (pairs > 0) {
      const StepDetail d = step_detailed(s.arm, s.world, params, x, u, t.dt);
      for (int p = 0; p < pairs; ++p) {
        double hard = 0.0;
        for (const HardContact& h : d.hard)
          if (h.query.pair_index == p) hard = h.force().norm();
        const double psi = d.pairs.empty() ? 0.0 : d.pairs[p].psi;
        const double virt =
            d.virtual_forces.empty() ? 0.0 : d.virtual_forces[p].total(d.pairs[p]).norm();
        f << "," << fmt(psi) << "," << fmt(hard) << "," << fmt(virt);
      }
    }
    f << "\n";
  }
  require(f.good(), "export: writing trajectory.csv failed");

  std::ofstream g = open("torques.csv");
  g << "t";
  for (int j = 0; j < n; ++j) g << ",tau_contact" << j;
  for (int j = 0; j < n; ++j) g << ",tau_free" << j;
  g << "\n";
  for (std::size_t i = 0; i < run.torques.tau_c.size(); ++i) {
    g << fmt(t.times[i]);
    for (int j = 0; j < n; ++j) g << "," << fmt(run.torques.tau_c[i][j]);
    for (int j = 0; j < n; ++j) g << "," << fmt(run.torques.tau_wo[i][j]);
    g << "\n";
  }
  require(g.good(), "export: writing torques.csv failed");
}

}  // namespace insat
