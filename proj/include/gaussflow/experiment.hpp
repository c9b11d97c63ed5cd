#pragma once

// Experiment configuration, orchestration and report emission for the
// command-line tool and the Python module.
//
// Config files are JSON objects:
//   {
//     "schema": "gaussflow-experiment/1",
//     "command": "flow-run",
//     "seed": 7,
//     "dims": {"n": 2, "m": 2},
//     "output": "runs/flow",
//     "patch": {"recipe": "sine-sum", "amplitude": 0.3, "nodes": 32},
//     "flow": {"steps": 200, "v0": 2.9}
//   }
// Each command reads its own section ("grassmann", "bound", "flow",
// "estimate", "soliton") and the shared "patch" section where it needs a
// patch. Unknown keys, duplicate keys and sections the command does not use
// are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaussflow/flow.hpp"
#include "gaussflow/patch.hpp"
#include "gaussflow/quadform.hpp"
#include "gaussflow/soliton.hpp"

namespace gaussflow::experiment {

inline constexpr const char* kSchema = "gaussflow-experiment/1";

enum class Command { GrassmannCheck, BoundScan, FlowRun, EstimateSweep, SolitonCheck };

std::string to_string(Command c);
std::optional<Command> command_from_string(std::string_view s);
const std::vector<std::string>& command_names();

/// Closed-form or file-backed initial patch. Which fields are read depends
/// on `recipe`: affine, sine-product, saddle, sine-sum, grim-reaper, sphere,
/// file.
struct PatchRecipe {
  std::string recipe = "sine-sum";
  double amplitude = 0.3;
  double wavenumber = 1.0;
  int nodes = 32;
  double delta = 0.2;
  double half_width = 1.0;
  int nodes_x1 = 41;
  int nodes_other = 41;
  std::optional<double> radius;
  Matrix slope;
  Vector offset;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> grid;
  Boundary boundary = Boundary::FixedAffine;
  std::string path;
};

GraphPatch build_patch(const PatchRecipe& recipe, Dims dims);

struct GrassmannParams {
  std::size_t trials = 10000;
};

enum class ScanKind { BJ14, Eps0, EpsT2 };

struct BoundParams {
  ScanKind scan = ScanKind::BJ14;
  double lambda0 = 0.5;
  double v0 = 2.0;
  double Lambda = 1.0;
  std::size_t trials = 1000;
  /// Empty means the top-level dims.
  std::vector<Dims> dims;
};

struct FlowParams {
  FlowConfig flow;
  /// When set, overrides flow.steps: steps = ceil(duration / dt).
  std::optional<double> duration;
  bool snapshots_jsonl = false;
};

struct EstimateParams {
  std::vector<double> R_list{1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2};
  std::vector<double> T_list{1, 2, 4, 8, 16};
  std::vector<double> rescale{2, 3};
  double max_variation = 2.0;
  double rescale_tol = 1e-8;
};

struct SolitonParams {
  SolitonSpec spec;
  /// Unset: estimated with estimate_eps_T2(Lambda).
  std::optional<double> eps_hat;
  double Lambda = 1.0;
  double v0 = 3.0;
  std::size_t eps_trials = 200;
  InequalityOptions inequality;
  double identity_c = 10.0;
  std::vector<double> R_list{2, 4, 8};
};

struct ExperimentConfig {
  std::string schema = kSchema;
  Command command = Command::FlowRun;
  std::uint64_t seed = 0;
  Dims dims{2, 2};
  std::optional<std::string> output;
  PatchRecipe patch;
  GrassmannParams grassmann;
  BoundParams bound;
  FlowParams flow;
  EstimateParams estimate;
  SolitonParams soliton;
};

/// Throws ParseError (with the byte offset) on malformed JSON and
/// ValidationError listing every violation on schema errors.
ExperimentConfig validate_config(std::string_view text);

/// Canonical JSON of a config with all defaults filled in.
std::string config_json(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::optional<double> margin;
  std::string detail;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, double>> timings;
  std::optional<std::string> error;

  bool passed() const;
  /// 0 pass, 1 verdict failure, 3 runtime error.
  int exit_code() const;
};

/// Runs the configured pipeline and writes its artifacts plus report.json
/// into `out_dir` (created if missing). Module errors are caught and stored
/// in the report.
RunReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

std::string report_json(const RunReport& report);

}  // namespace gaussflow::experiment
