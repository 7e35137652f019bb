// nonlocal-flow: run, predict or verify scenarios from a JSON config.
//
//   nonlocal-flow run <config.json> [--out DIR]
//   nonlocal-flow predict <config.json>
//   nonlocal-flow check <config.json> [--out DIR]
//
// Exit codes: 0 all enabled checks pass, 1 a check failed, 2 usage or schema
// error. NONLOCAL_FLOW_THREADS caps how many scenarios run concurrently.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nonlocal_flow/errors.hpp"
#include "nonlocal_flow/scenario.hpp"

namespace nf = nonlocal_flow;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

int run_and_report(std::vector<nf::ScenarioConfig> configs,
                   const std::string& out_dir, bool force_all_checks) {
  if (force_all_checks) {
    for (auto& c : configs) c.checks = nf::CheckFlags::all();
  }
  std::optional<std::filesystem::path> out;
  if (!out_dir.empty()) out = out_dir;
  const auto reports = nf::run_scenarios(configs, out, nf::thread_budget());

  nlohmann::json summary = nlohmann::json::array();
  bool all_ok = true;
  for (const auto& r : reports) {
    all_ok = all_ok && r.ok();
    summary.push_back(r.to_json());
    std::cerr << (r.ok() ? "PASS " : "FAIL ") << r.name;
    if (r.error) std::cerr << " (" << *r.error << ")";
    for (const auto& c : r.checks) {
      if (!c.ok) std::cerr << " [" << c.name << " failed]";
    }
    std::cerr << '\n';
  }
  std::cout << summary.dump(2) << '\n';
  return all_ok ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and verify the nonlocal bistable equation on atom ensembles"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "integrate scenarios, run configured checks, write outputs");
  run->add_option("config", config_path, "scenario config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory for CSV and report files");

  auto* predict = app.add_subcommand("predict", "print the predicted long-time limit only");
  predict->add_option("config", config_path, "scenario config (JSON)")->required();

  auto* check = app.add_subcommand("check", "integrate and run every check");
  check->add_option("config", config_path, "scenario config (JSON)")->required();
  check->add_option("--out", out_dir, "output directory for CSV and report files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  std::vector<nf::ScenarioConfig> configs;
  try {
    configs = nf::load_config(config_path);
  } catch (const nf::SchemaError& e) {
    std::cerr << "schema error at " << e.what() << '\n';
    return kExitUsage;
  } catch (const nf::IoError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*predict) {
      nlohmann::json out = nlohmann::json::array();
      bool ok = true;
      for (const auto& c : configs) {
        out.push_back(nf::predict_scenario(c));
        ok = ok && !out.back().contains("error");
      }
      std::cout << out.dump(2) << '\n';
      return ok ? kExitPass : kExitCheckFailure;
    }
    return run_and_report(std::move(configs), out_dir, /*force_all_checks=*/static_cast<bool>(*check));
  } catch (const nf::IoError& e) {
    std::cerr << e.what() << '\n';
    return kExitCheckFailure;
  }
}
