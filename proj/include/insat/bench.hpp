#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "insat/search.hpp"

namespace insat {

constexpr int kScenarioSchemaVersion = 1;

/// A complete, validated experiment definition.
struct Scenario {
  std::string name;
  ArmModel arm;
  World world;
  JointState start, goal;
  CostWeights weights;
  ContactConstants contact;
  double resolution = 0.1;  // rad
  SolveSettings trajopt;
  PlannerConfig planner;  // planner.seed is the scenario seed
};

/// Throws ContractViolation naming the offending field (dotted path) on any parse or
/// validation problem, including keys the schema does not know.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);
std::string dump_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Sizes, ranges and limits of every section.
void validate_structure(const Scenario& s);
/// validate_structure plus start and goal admissibility in the scenario's own world.
void validate_scenario(const Scenario& s);

/// Baseline mode: no contact pairs, touching counts as collision.
void disable_contact(Scenario& s);

struct TorqueSeries {
  double trr = 0.0;
  std::vector<Vector> tau_c;   // net joint torque with the environment's reaction
  std::vector<Vector> tau_wo;  // same motion, no environmental support
};

/// TRR = (|tau_wo| - |tau_c|) / |tau_c| over the stacked trajectory.
TorqueSeries compute_trr(const Trajectory& traj, const ArmModel& model, const World& world);

struct RunReport {
  bool success = false;
  std::string message;
  PlanStats stats;
  int samples = 0;
  double duration = 0.0;  // s
  double total_cost = 0.0;
  Vector rms_tau_contact;
  Vector rms_tau_free;
  double trr = 0.0;
  bool trr_defined = false;
  double max_abs_u = 0.0;
  bool torque_violation = false;
  bool velocity_violation = false;
  bool collision_violation = false;
  bool goal_missed = false;
  int contact_samples = 0;  // samples in the surface band
};

struct RunOutput {
  PlanResult result;
  RunReport report;
  TorqueSeries torques;
  Scenario scenario;
};

/// Plan the scenario and evaluate the result. An inadmissible start or goal is a planning
/// failure here, not an error.
RunOutput run_scenario(const Scenario& s);

RunReport make_report(const PlanResult& result, const Scenario& s, TorqueSeries* torques = nullptr);

std::string report_json(const RunReport& r, const Scenario& s);

/// trajectory.csv, torques.csv and report.json on success; report.json alone otherwise.
void export_run(const RunOutput& run, const std::filesystem::path& out_dir);

}  // namespace insat
