#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nonlocal_flow/analysis.hpp"
#include "nonlocal_flow/integrator.hpp"
#include "nonlocal_flow/measure_state.hpp"

namespace nonlocal_flow {

struct CheckFlags {
  bool mass = true;
  bool interval = true;
  bool lyapunov = true;
  bool omega_limit = true;
  bool characteristic = true;
  bool sandwich = true;
  bool h2_uniqueness = true;

  static CheckFlags all() { return {}; }
};

struct ScenarioConfig {
  std::string name;
  InitialDatumSpec initial_datum;
  // JSON form of the datum, echoed into reports.
  nlohmann::json initial_datum_json;
  // Treat the datum as an approximation of u0 without atoms in (0, 1).
  // Defaults to true for sampled data, false for explicit atoms and pieces.
  bool no_atom_condition = false;
  StepControl control;
  std::vector<std::string> lyapunov;
  CheckFlags checks;
  bool allow_no_hypothesis = false;
  double sandwich_eps = 0.05;
  double classify_tol = kDefaultClassifyTol;
  double characteristic_horizon = 50.0;
};

/// Parses `{"scenarios": [...]}`. Every malformed input raises SchemaError
/// carrying the JSON path of the offending element, e.g.
/// `scenarios[0].initial_datum.atoms[0].weight`.
std::vector<ScenarioConfig> parse_config(std::string_view text);

std::vector<ScenarioConfig> load_config(const std::filesystem::path& path);

struct CheckResult {
  std::string name;
  std::string claim;
  bool applicable = true;
  bool ok = true;
  nlohmann::json details = nlohmann::json::object();
};

struct ScenarioReport {
  std::string name;
  std::optional<std::string> error;  // set when the run could not proceed
  std::optional<HypothesisClass> hypothesis;
  std::optional<OmegaPrediction> prediction;
  std::optional<TrajectoryRecord> record;
  std::vector<CheckResult> checks;

  bool ok() const;
  nlohmann::json to_json() const;
};

/// Validate, evolve, then run every enabled check. With `out_dir`, writes
/// `<name>.csv`, `<name>.csv.final.csv` and `<name>.report.json` there.
ScenarioReport run_scenario(const ScenarioConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir =
                                std::nullopt);

/// Prediction only; no integration.
nlohmann::json predict_scenario(const ScenarioConfig& cfg);

/// Runs scenarios on up to `threads` workers. Reports come back in input
/// order and do not depend on the thread count.
std::vector<ScenarioReport> run_scenarios(
    const std::vector<ScenarioConfig>& configs,
    const std::optional<std::filesystem::path>& out_dir, unsigned threads);

/// Worker count from NONLOCAL_FLOW_THREADS, else hardware concurrency.
unsigned thread_budget();

}  // namespace nonlocal_flow
