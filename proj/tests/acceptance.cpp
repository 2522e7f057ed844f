// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "insat/bench.hpp"
#include "insat/contact_model.hpp"
#include "insat/cost.hpp"
#include "insat/dynamics.hpp"
#include "insat/simulate.hpp"
#include "insat/trajopt.hpp"
#include "search_oracle.hpp"
#include "test_util.hpp"

using namespace insat;
using namespace insat::testing;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kG = 9.81;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(INSAT_SCENARIO_DIR) / (name + ".json");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PlanResult plan_with_log(const Scenario& s, std::vector<SearchEvent>* log, std::vector<SearchNode>* nodes) {
  validate_structure(s);
  auto backend = std::make_shared<OptimizerBackend>(s.arm, s.world, s.weights, s.trajopt, s.contact);
  backend->max_scale = s.planner.max_horizon_scale;
  Planner p(s.arm, s.world, LatticeSpec::from_model(s.arm, s.resolution), s.planner, backend);
  PlanResult r = p.plan(s.start, s.goal);
  if (log) *log = p.log();
  if (nodes) *nodes = p.nodes();
  return r;
}

Verdict pendulum() {
  Verdict v;
  const auto t0 = Clock::now();
  const double L = 0.8;
  const ArmModel m = ArmModel::uniform(1, L, 1.3);
  double worst = 0.0;
  for (double q = -3.1; q <= 3.1; q += 0.01) {
    const Vector qdd = forward_dynamics(m, JointState::at_rest(vec({q})), {Vector::Zero(1), {}});
    worst = std::max(worst, std::abs(qdd[0] + 3.0 * kG / (2.0 * L) * std::sin(q)));
  }
  v.check(worst <= 1e-12, fmt("closed-form error %.3g", worst));

  // energy sampled with the velocity synchronized to the position (mean of adjacent rates)
  const ContactParams none = ContactParams::zeros(0);
  JointState x = JointState::at_rest(vec({1.0}));
  const double e0 = total_energy(m, x);
  double drift = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const JointState next = step(m, World{}, none, x, Vector::Zero(1), 1e-3);
    drift = std::max(drift, std::abs(total_energy(m, {x.q, 0.5 * (x.qdot + next.qdot)}) - e0) / std::abs(e0));
    x = next;
  }
  v.check(drift < 1e-3, fmt("energy drift %.3g", drift));
  const double t = since(t0);
  v.check(t < 1.0, fmt("runtime %.2f s", t));
  v.note(fmt("max error %.2g, drift %.2g", worst, drift));
  return v;
}

CostWeights random_weights(std::mt19937& rng, double r_lo, double r_hi) {
  CostWeights w;
  w.w1 = uniform(rng, 0.1, 5);
  w.w2 = uniform(rng, 0.1, 5);
  w.w3 = uniform(rng, 0.1, 5);
  w.R = uniform(rng, r_lo, r_hi);
  return w;
}

Vector stacked_gradient(const CostDerivatives& d) {
  Vector g(d.cx.size() + d.cu.size());
  g << d.cx, d.cu;
  return g;
}

Verdict derivatives() {
  Verdict v;
  std::mt19937 rng(301);
  double worst_grad = 0.0, worst_eig = 0.0, worst_hess = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const CostWeights w = random_weights(rng, -1.0, 1.0);
    const Vector z = random_vector(rng, 3 * n, 1.0);
    auto c = [&](const Vector& y) {
      return risk_transform(running_cost({y.head(n), y.segment(n, n)}, y.tail(n), w), w.R);
    };
    const Vector g = stacked_gradient(running_cost_derivatives({z.head(n), z.segment(n, n)}, z.tail(n), w));
    Vector fd(3 * n);
    for (int i = 0; i < 3 * n; ++i) {
      Vector zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      fd[i] = (c(zp) - c(zm)) / (2 * h);
    }
    worst_grad = std::max(worst_grad, (g - fd).norm() / fd.norm());

    ContactParams p = ContactParams::zeros(1);
    p.k[0] = uniform(rng, 0, 3);
    p.b[0] = uniform(rng, 0, 3);
    const Vector target = random_vector(rng, n, 1.0);
    const JointState xs{z.head(n), z.segment(n, n)};
    const Vector gt = terminal_cost_derivatives(xs, target, p, w).cx;
    Vector fdt = Vector::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
      Vector qp = xs.q, qm = xs.q;
      qp[i] += h;
      qm[i] -= h;
      fdt[i] = (risk_transform(terminal_cost({qp, xs.qdot}, target, p, w), w.R) -
                risk_transform(terminal_cost({qm, xs.qdot}, target, p, w), w.R)) /
               (2 * h);
    }
    worst_grad = std::max(worst_grad, (gt - fdt).norm() / std::max(fdt.norm(), 1e-12));
  }
  v.check(worst_grad < 1e-5, fmt("gradient rel err %.3g", worst_grad));

  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const CostWeights w = random_weights(rng, 0.0, 2.0);
    const JointState x{random_vector(rng, n, 1), random_vector(rng, n, 1)};
    for (const Matrix& H : {running_cost_derivatives(x, random_vector(rng, n, 1), w).cxx,
                            terminal_cost_derivatives(x, random_vector(rng, n, 1), ContactParams::zeros(0), w).cxx}) {
      const Eigen::SelfAdjointEigenSolver<Matrix> es(H);
      const double scale = std::max(1.0, es.eigenvalues().maxCoeff());
      worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff() / scale);
    }
  }
  v.check(worst_eig >= -1e-10, fmt("min scaled eigenvalue %.3g", worst_eig));

  // every residual is a coordinate selection, so the Gauss-Newton Hessian is exact
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const CostWeights w = random_weights(rng, -1.0, 1.0);
    const Vector z = random_vector(rng, 3 * n, 1.0);
    auto grad = [&](const Vector& y) {
      return stacked_gradient(running_cost_derivatives({y.head(n), y.segment(n, n)}, y.tail(n), w));
    };
    const auto d = running_cost_derivatives({z.head(n), z.segment(n, n)}, z.tail(n), w);
    Matrix H(3 * n, 3 * n);
    H.topLeftCorner(2 * n, 2 * n) = d.cxx;
    H.bottomRightCorner(n, n) = d.cuu;
    H.bottomLeftCorner(n, 2 * n) = d.cux;
    H.topRightCorner(2 * n, n) = d.cux.transpose();
    Matrix fd(3 * n, 3 * n);
    const double hh = 1e-5;
    for (int i = 0; i < 3 * n; ++i) {
      Vector zp = z, zm = z;
      zp[i] += hh;
      zm[i] -= hh;
      fd.col(i) = (grad(zp) - grad(zm)) / (2 * hh);
    }
    worst_hess = std::max(worst_hess, (H - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  v.check(worst_hess < 1e-4, fmt("Gauss-Newton rel err %.3g", worst_hess));
  v.note(fmt("grad %.2g, GN %.2g", worst_grad, worst_hess));
  return v;
}

Verdict contact_fixed_points() {
  Verdict v;
  ContactConstants c;
  c.mu_s = 0.7;
  c.mu_k = 0.5;
  v.check(virtual_friction_coeff(0.0, c) == (c.mu_s + c.mu_k) / 2, "peak is not the static/kinetic mean");
  for (double s : {1.0, -1.0}) {
    const double e = std::abs(virtual_friction_coeff(s * c.psidot_thres, c) - c.rho);
    v.check(e <= 1e-9, fmt("threshold error %.3g", e));
  }
  for (double rate = -10.0; rate <= 10.0; rate += 1e-4) {
    const double m = virtual_friction_coeff(rate, c);
    if (m < 0.0 || m > c.mu_bar()) {
      v.check(false, fmt("coefficient %.6g out of range at rate %.4g", m, rate));
      break;
    }
  }
  double worst = 0.0;
  for (double psi = -0.2; psi <= 0.5; psi += 1e-3)
    for (double rate = -3.0; rate <= 3.0; rate += 0.05)
      worst = std::max(worst, std::abs(virtual_normal_force(psi, rate, 0.0, 0.0, c)));
  v.check(worst == 0.0, fmt("normal force %.3g without stiffness or damping", worst));
  return v;
}

Verdict risk() {
  Verdict v;
  for (double l : {0.0, 0.3, 7.0, 1e4}) v.check(risk_transform(l, 0.0) == l, "R = 0 is not the identity");
  for (double R : {-5.0, -0.1, 0.2, 3.0}) v.check(risk_transform(0.0, R) == 0.0, "zero is not fixed");
  for (double R : {-4.0, -1.0, -0.25}) {
    const double c = risk_transform(1e3, R);
    v.check(c <= -1.0 / R && c > 0.0, fmt("bound broken for R = %g: %.6g", R, c));
  }
  double worst = 0.0;
  for (double R : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
    const double h = 1e-7;
    worst = std::max(worst, std::abs((risk_transform(h, R) - risk_transform(-h, R)) / (2 * h) - 1.0));
  }
  v.check(worst <= 1e-6, fmt("slope error %.3g", worst));
  return v;
}

// Discrete Riccati recursion for the semi-implicit Euler double integrator.
double riccati_cost(double e0, double v0, double dt, int steps, double inertia, double w1, double w2, double w3) {
  Eigen::Matrix2d A;
  A << 1, dt, 0, 1;
  Eigen::Vector2d B(dt * dt / inertia, dt / inertia);
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Q(1, 1) = dt * w3;
  const double Rr = dt * w2;
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  P(0, 0) = w1;
  for (int i = 0; i < steps; ++i) {
    const double s = Rr + B.dot(P * B);
    const Eigen::RowVector2d BtPA = B.transpose() * P * A;
    P = Q + A.transpose() * P * A - BtPA.transpose() * BtPA / s;
  }
  const Eigen::Vector2d x0(e0, v0);
  return 0.5 * x0.dot(P * x0);
}

Verdict ilqr_vs_riccati() {
  Verdict v;
  const auto t0 = Clock::now();
  ArmModel m = ArmModel::uniform(1, 1.0, 3.0);  // unit inertia about the joint
  m.gravity.setZero();
  CostWeights w;
  w.norm = NormKind::Quadratic;
  w.w1 = 10.0;
  w.w2 = 0.1;
  w.w3 = 0.05;
  SolveSettings s;
  s.dt = 0.02;
  s.horizon = 1.0;
  s.knots = 51;
  s.interpolation = Interpolation::ZeroOrder;
  const TrajectoryOptimizer opt(m, World{}, w, s);
  std::mt19937 rng(307);
  double worst = 0.0;
  int iterations = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const double q0 = uniform(rng, -1, 1), v0 = uniform(rng, -1, 1), goal = uniform(rng, -1, 1);
    SolveStats stats;
    const Trajectory t = opt.solve({vec({q0}), vec({v0})}, {vec({goal}), vec({goal}), 0.05}, nullptr, &stats);
    const double expected = riccati_cost(q0 - goal, v0, s.dt, 50, 1.0, w.w1, w.w2, w.w3);
    worst = std::max(worst, std::abs(t.total_cost - expected) / expected);
    iterations = std::max(iterations, stats.iterations);
  }
  v.check(worst <= 1e-6, fmt("relative cost gap %.3g", worst));
  v.check(iterations <= 5, fmt("%g iterations", iterations));
  const double t = since(t0);
  v.check(t < 5.0, fmt("runtime %.2f s", t));
  v.note(fmt("gap %.2g, %g iterations", worst, iterations));
  return v;
}

Verdict dijkstra_harness() {
  Verdict v;
  std::mt19937 rng(311);
  int matched = 0, reachable = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ArmModel m = limited_arm(3, 1.5);
    const World w = random_world(rng, m);
    const LatticeSpec spec = LatticeSpec::from_model(m, 0.25);
    const Cell s = random_free_cell(rng, m, w, spec, 6), g = random_free_cell(rng, m, w, spec, 6);
    const double oracle = dijkstra(s, g, m, w, spec);
    Planner p(m, w, spec, harness_config(1.0), std::make_shared<EuclideanBackend>(spec));
    const PlanResult r = p.plan(lift(s, spec), lift(g, spec));
    if (std::isinf(oracle)) {
      v.check(!r.success, "planned a path the oracle says does not exist");
      continue;
    }
    ++reachable;
    if (r.success && r.trajectory.total_cost == oracle) ++matched;
  }
  v.check(matched == reachable, fmt("%g of %g reachable worlds matched", matched, reachable));
  v.note(fmt("%g/%g exact matches", matched, reachable));
  return v;
}

const std::vector<std::string> kBundled = {"ledge-2link", "tube-crawl-3link", "overweight-drag", "free-space-sanity",
                                           "reuse-stiff"};

Verdict lazy_invariants() {
  Verdict v;
  int evaluations = 0, below = 0, expansions = 0;
  double worst_gap = 0.0;
  std::string counts;
  for (const std::string& name : kBundled) {
    Scenario s = load_scenario(scenario_path(name));
    std::vector<SearchEvent> log;
    std::vector<SearchNode> nodes;
    const PlanResult lazy = plan_with_log(s, &log, &nodes);
    for (const SearchEvent& e : log) {
      if (e.kind == SearchEvent::Kind::Expand) {
        ++expansions;
        v.check(e.actual, name + ": expanded a lazy node");
        v.check(e.key <= e.open_min, name + ": expanded a node whose key was not minimal");
      } else if (e.kind == SearchEvent::Kind::Evaluate) {
        ++evaluations;
        if (e.actual_g < e.lazy_g) {
          ++below;
          worst_gap = std::max(worst_gap, (e.lazy_g - e.actual_g) / e.lazy_g);
        }
      }
    }
    s.planner.lazy_enabled = false;
    const PlanResult eager = plan_with_log(s, nullptr, nullptr);
    v.check(lazy.stats.warm_starts <= eager.stats.warm_starts,
            name + ": lazy warm starts exceed eager (" + std::to_string(lazy.stats.warm_starts) + " > " +
                std::to_string(eager.stats.warm_starts) + ")");
    v.check(lazy.success == eager.success, name + ": lazy and eager disagree on success");
    counts += (counts.empty() ? "" : " ") + name + " " + std::to_string(lazy.stats.warm_starts) + "/" +
              std::to_string(eager.stats.warm_starts);
  }
  v.check(below == 0, std::to_string(below) + " of " + std::to_string(evaluations) +
                          " evaluations had actual g below the lazy g (worst " + fmt("%.3g", 100 * worst_gap) + "%)");
  v.note(std::to_string(expansions) + " expansions checked; warm starts lazy/eager: " + counts);
  return v;
}

Verdict bracing() {
  Verdict v;
  const auto t0 = Clock::now();
  Scenario s = load_scenario(scenario_path("overweight-drag"));
  const Vector g = gravity_torque(s.arm, s.start.q);
  v.check((g.cwiseAbs().array() > s.arm.torque_limits.array()).any(),
          "start pose is holdable without contact, scenario does not test bracing");
  const RunOutput run = run_scenario(s);
  const RunReport& r = run.report;
  v.check(r.success, "planner with contact failed: " + r.message);
  if (r.success) {
    const Trajectory& t = run.result.trajectory;
    double worst = 0.0;
    for (int i = 0; i < t.steps(); ++i) {
      const Vector u = t.control_at(i);
      for (Eigen::Index j = 0; j < u.size(); ++j)
        worst = std::max(worst, std::abs(u[j]) - s.arm.torque_limits[j]);
    }
    v.check(worst <= 0.0 && !r.torque_violation, fmt("torque limit exceeded by %.3g", worst));
    v.check(r.trr_defined && r.trr > 0.0, fmt("TRR %.4g", r.trr));
    v.note(fmt("TRR %.3f, max |u| %.3f", r.trr, r.max_abs_u));
  }
  Scenario bare = s;
  disable_contact(bare);
  const RunReport b = run_scenario(bare).report;
  v.check(!b.success || b.torque_violation, "contact-free baseline succeeded within limits");
  const double t = since(t0);
  v.check(t < 600.0, fmt("wall time %.1f s", t));
  v.note(fmt("wall %.1f s", t));
  return v;
}

Verdict reduced_rejection() {
  Verdict v;
  Scenario s = load_scenario(scenario_path("reuse-stiff"));
  std::vector<SearchEvent> log;
  std::vector<SearchNode> nodes;
  const PlanResult with = plan_with_log(s, &log, &nodes);
  v.check(with.stats.reused >= 1, "no terminal reuse happened");
  const LatticeSpec spec = LatticeSpec::from_model(s.arm, s.resolution);
  int retargeted = 0;
  for (const SearchEvent& e : log) {
    if (e.kind != SearchEvent::Kind::Retarget) continue;
    ++retargeted;
    const SearchNode& n = nodes[e.node];
    v.check(n.has_traj && lambda(n.traj.terminal_state(), spec) == n.cell, "re-targeted node left its cell");
  }
  s.planner.reuse_enabled = false;
  const PlanResult without = plan_with_log(s, nullptr, nullptr);
  v.check(without.stats.discarded >= with.stats.discarded,
          "fewer discards without reuse (" + std::to_string(without.stats.discarded) + " < " +
              std::to_string(with.stats.discarded) + ")");
  v.note(std::to_string(retargeted) + " re-targeted; discarded " + std::to_string(with.stats.discarded) +
         " with reuse, " + std::to_string(without.stats.discarded) + " without");
  return v;
}

Verdict determinism() {
  Verdict v;
  const Scenario s = load_scenario(scenario_path("ledge-2link"));
  const auto root = std::filesystem::temp_directory_path() / "insat_acceptance";
  std::filesystem::remove_all(root);
  export_run(run_scenario(s), root / "a");
  export_run(run_scenario(s), root / "b");
  for (const char* f : {"trajectory.csv", "torques.csv"}) {
    const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    v.check(!a.empty(), std::string(f) + " missing");
    v.check(a == b, std::string(f) + " differs between runs");
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"pendulum closed form and energy drift", pendulum},
      {"cost derivatives", derivatives},
      {"contact model fixed points", contact_fixed_points},
      {"risk transform", risk},
      {"iLQR against Riccati", ilqr_vs_riccati},
      {"search against Dijkstra", dijkstra_harness},
      {"lazy evaluation invariants", lazy_invariants},
      {"bracing end to end", bracing},
      {"reduced rejection", reduced_rejection},
      {"deterministic exports", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    if (!v.pass) ++failed;
    std::printf("%s %2zu %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), since(t0),
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
