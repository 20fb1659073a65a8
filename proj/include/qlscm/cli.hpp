#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlscm/stgrid.hpp"

namespace qlscm {

using Json = nlohmann::ordered_json;

/// Effective settings of one CLI invocation; every result bundle echoes it
/// so output files are reproducible from the bundle alone.
struct RunConfig {
  std::string command;  // simulate | analyze | bootstrap-test | hill

  // simulate
  std::string sim_case = "case1";  // case1 | case2 | case3 | example1
  int reps = 1;
  int grid_nx = 50;
  int grid_ny = 20;
  int m = 100;
  int example1_n = 50000;
  bool save_panels = false;

  // shared
  std::vector<double> taus = {0.1, 0.5, 0.9};
  std::uint64_t seed = 1;
  std::string out_dir = "qlscm_out";
  std::string weights = "area";  // uniform | coslat | area

  // analyze / bootstrap-test / hill
  std::string input;
  std::string regions;  // region-map CSV path; empty: labels from the data
  std::vector<int> months;
  CsvSchema schema;

  // bootstrap
  int bootstrap_reps = 250;
  double block = 5.0;
  double level = 0.99;
  bool audit_replicates = false;

  // hill
  int hill_k = 0;  // 0: k-grid at 1%..10% of n
};

/// Merges a JSON config file into cfg (file values overwrite defaults;
/// command-line flags overwrite both).
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Throws ConfigError on invalid settings.
void validate_config(const RunConfig& cfg);

Json config_echo(const RunConfig& cfg);

Json cmd_simulate(const RunConfig& cfg);
Json cmd_analyze(const RunConfig& cfg);
Json cmd_bootstrap_test(const RunConfig& cfg);
Json cmd_hill(const RunConfig& cfg);

/// Full command-line entry point: parses flags (and --config), dispatches,
/// prints the result bundle to stdout. Exit codes: 0 success, 2 usage or
/// config error, 3 data/validation error, 4 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace qlscm
