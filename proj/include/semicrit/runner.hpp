#pragma once

// Reproducible experiment runner: parses a JSON config, executes the
// simulate -> action -> residual -> decomposition -> verdicts pipeline, and
// writes a machine-readable manifest plus CSV tables. The manifest is
// deterministic for a fixed config; in exact-repro mode wall-clock timings
// are omitted so two identical runs produce byte-identical manifests.

#include <cstdint>
#include <string>
#include <vector>

namespace semicrit {

struct RunConfig {
  std::string experiment = "example";  // example | wiener | ou_control | custom
  int n_steps = 512;
  int m_paths = 50000;
  std::uint64_t seed = 7;
  int threads = 1;
  bool exact_repro = false;
  double alpha = 0.01;

  std::string potential_kind = "zero";  // zero | quadratic | linear
  double potential_coeff = 0.0;
  std::vector<double> potential_lin;

  int bank_size = 20;
  double bank_clip = 10.0;
  std::uint64_t bank_seed = 777;
  std::vector<double> eps_list = {1e-3, 1e-2};

  std::string output_dir = "out";

  // experiment = custom: constant characteristics.
  std::vector<double> custom_drift = {1.0};
  std::vector<double> custom_sigma = {1.0};
  std::vector<double> custom_x0 = {0.0};
};

// Throws std::invalid_argument listing every offending key.
RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

enum RunStages : unsigned {
  kStageEl = 1u << 0,
  kStageCriticality = 1u << 1,
  kStageFbs = 1u << 2,
  kStageMarginal = 1u << 3,
  kStageAll = kStageEl | kStageCriticality | kStageFbs | kStageMarginal,
};

struct RunResult {
  std::string manifest_json;  // pretty-printed manifest
  bool all_pass = false;      // every enabled verdict passed
  std::string output_dir;
};

// Executes the pipeline and writes manifest.json, action.csv,
// criticality.csv, A_process.csv and x1_samples.csv into the output dir
// (created if missing). `stages` restricts which verdict stages run.
RunResult run(const RunConfig& config, unsigned stages = kStageAll);

// Bank descriptors for a given (seed, size, clip) as a JSON array string.
std::string bank_descriptors_json(std::uint64_t seed, int size, double clip_bound);

// Floating point formatted with 17 significant digits (CSV/manifest contract).
std::string format_float(double x);

}  // namespace semicrit
