#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "insat/bench.hpp"

using namespace insat;

namespace {

constexpr int kOk = 0;
constexpr int kPlanFailed = 2;
constexpr int kConfigError = 3;

// INSAT_LOG: 0 quiet, 1 (default) summary, 2 adds the planner statistics
int log_level() {
  const char* v = std::getenv("INSAT_LOG");
  return v ? std::atoi(v) : 1;
}

struct Overrides {
  bool no_lazy = false, no_seed = false, no_reuse = false, no_contact = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> time_budget;

  void apply(Scenario& s) const {
    if (no_lazy) s.planner.lazy_enabled = false;
    if (no_seed) s.planner.seed_enabled = false;
    if (no_reuse) s.planner.reuse_enabled = false;
    if (no_contact) disable_contact(s);
    if (seed) s.planner.seed = *seed;
    if (time_budget) s.planner.time_budget = *time_budget;
    s.planner.validate();
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_flag("--no-lazy", o.no_lazy, "Warm-start every edge when it is generated");
  cmd->add_flag("--no-seed", o.no_seed, "Skip the RRT-Connect seed path");
  cmd->add_flag("--no-reuse", o.no_reuse, "Discard trajectories that miss their target cell");
  cmd->add_flag("--no-contact", o.no_contact, "Remove all contact pairs; touching counts as collision");
  cmd->add_option("--seed", o.seed, "RNG seed for the seed path");
  cmd->add_option("--time-budget", o.time_budget, "Planning time limit in seconds")->check(CLI::PositiveNumber);
}

void print_summary(const RunReport& r, const Scenario& s) {
  if (log_level() < 1) return;
  std::printf("%s: %s (%s)\n", s.name.c_str(), r.success ? "success" : "FAILED", r.message.c_str());
  std::printf("  wall %.2f s, expansions %d, optimizations %d, warm starts %d, reused %d, discarded %d\n",
              r.stats.wall_time, r.stats.expansions, r.stats.optimizations, r.stats.warm_starts, r.stats.reused,
              r.stats.discarded);
  if (log_level() >= 2)
    std::printf("  edge solves %.2f s, warm starts %.2f s\n", r.stats.connect_time, r.stats.warm_start_time);
  if (!r.success) return;
  std::printf("  duration %.3f s, cost %.6g, max |u| %.4g, contact samples %d\n", r.duration, r.total_cost,
              r.max_abs_u, r.contact_samples);
  if (r.trr_defined) std::printf("  TRR %.4f\n", r.trr);
  if (r.torque_violation || r.velocity_violation || r.collision_violation || r.goal_missed)
    std::printf("  violations: torque %d velocity %d collision %d goal %d\n", r.torque_violation, r.velocity_violation,
                r.collision_violation, r.goal_missed);
  if (log_level() >= 2) {
    std::printf("  rms tau with contact:");
    for (Eigen::Index j = 0; j < r.rms_tau_contact.size(); ++j) std::printf(" %.4g", r.rms_tau_contact[j]);
    std::printf("\n  rms tau without:     ");
    for (Eigen::Index j = 0; j < r.rms_tau_free.size(); ++j) std::printf(" %.4g", r.rms_tau_free[j]);
    std::printf("\n");
  }
}

bool clean(const RunReport& r) {
  return r.success && !r.torque_violation && !r.velocity_violation && !r.collision_violation && !r.goal_missed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interleaved lattice search and trajectory optimization for planar arms"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  Overrides overrides;
  CLI::App* plan = app.add_subcommand("plan", "Plan one scenario");
  plan->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
  plan->add_option("--out", out_dir, "Directory for trajectory.csv, torques.csv and report.json");
  add_overrides(plan, overrides);

  double from = 0.5, to = 2.5, step = 0.5;
  CLI::App* sweep = app.add_subcommand("sweep", "Plan one scenario over a range of payload masses");
  sweep->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
  sweep->add_option("--from", from, "First payload mass, kg")->check(CLI::NonNegativeNumber);
  sweep->add_option("--to", to, "Last payload mass, kg")->check(CLI::NonNegativeNumber);
  sweep->add_option("--step", step, "Payload increment, kg")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Directory receiving one sub-directory per payload");
  add_overrides(sweep, overrides);

  CLI11_PARSE(app, argc, argv);

  Scenario s;
  try {
    s = load_scenario(scenario_path);
    overrides.apply(s);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }

  try {
    if (*plan) {
      const RunOutput run = run_scenario(s);
      print_summary(run.report, s);
      if (!out_dir.empty()) export_run(run, out_dir);
      return clean(run.report) ? kOk : kPlanFailed;
    }
    int failures = 0;
    std::printf("payload_kg,success,max_abs_u,trr,wall_s\n");
    for (double mass = from; mass <= to + 1e-9; mass += step) {
      Scenario variant = s;
      variant.arm.payload_mass = mass;
      variant.name = s.name + "@" + std::to_string(mass);
      RunOutput run;
      try {
        run = run_scenario(variant);
      } catch (const ContractViolation& e) {
        std::printf("%.3f,0,,,\n", mass);
        if (log_level() >= 1) std::fprintf(stderr, "  %.3f kg: %s\n", mass, e.what());
        ++failures;
        continue;
      }
      const RunReport& r = run.report;
      std::printf("%.3f,%d,%.6g,%s,%.3f\n", mass, clean(r) ? 1 : 0, r.max_abs_u,
                  r.trr_defined ? std::to_string(r.trr).c_str() : "", r.stats.wall_time);
      std::fflush(stdout);
      if (!clean(r)) ++failures;
      if (!out_dir.empty()) {
        char sub[32];
        std::snprintf(sub, sizeof sub, "payload_%.3f", mass);
        export_run(run, std::filesystem::path(out_dir) / sub);
      }
    }
    return failures == 0 ? kOk : kPlanFailed;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPlanFailed;
  }
}
