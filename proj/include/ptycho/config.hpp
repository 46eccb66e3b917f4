#pragma once

// JSON run configuration shared by the CLI subcommands.
//
//   {
//     "seed": 1,
//     "instance": { "dir": "..." }            // or simulation parameters:
//     "instance": { "side": 64, "grid": 5, "stride": 12, "probe_radius": 16,
//                   "probe_amplitude": 1, "probe_defocus": 1, "constraint_radius": 18,
//                   "amplitude_cap": 1.5, "object_amp_lo": 0.45, "object_amp_hi": 1,
//                   "noise": { "scale": 2 } | { "peak_count": 2 },
//                   "floors": { "x": 1e-12, "y": 1e-12 } },
//     "solver": { "variant": "phebie_parallel", "alpha": 1.1, "beta": 1.1, "gamma": 1e-30,
//                 "eta_x": 1e-12, "eta_y": 1e-12, "inner_rounds": 3, "warmup_iters": 10,
//                 "max_iters": 300, "block_rows": 1, "block_cols": 1,
//                 "certificate_tol": 1e-9, "dm_project_constraints": true },
//     "benchmark": { "trials": 5, "variants": ["phebie_whole", ...] },
//     "output": { "timing": true, "previews": true }
//   }
//
// Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptycho/simulate.hpp"
#include "ptycho/solvers.hpp"

namespace ptycho {

struct SolverSettings {
  Variant variant = Variant::phebie_parallel;
  std::optional<double> alpha;
  std::optional<double> beta;
  double gamma = 1e-30;
  std::optional<double> eta_x;
  std::optional<double> eta_y;
  int inner_rounds = 3;
  int warmup_iters = 10;
  int max_iters = 300;
  Index block_rows = 1;
  Index block_cols = 1;
  double certificate_tol = 1e-9;
  bool dm_project_constraints = true;
};

struct BenchmarkSettings {
  int trials = 5;
  std::vector<Variant> variants = {Variant::phebie_whole, Variant::phebie_parallel, Variant::thibault_dm,
                                   Variant::maiden_rodenburg};
};

struct OutputSettings {
  /// Record wall time in trace CSVs; off writes 0 so reruns are byte-identical.
  bool timing = true;
  bool previews = true;
};

struct AppConfig {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> instance_dir;
  SimulationParams simulation;
  SolverSettings solver;
  BenchmarkSettings benchmark;
  OutputSettings output;
};

/// Throws ParameterError on malformed or unknown entries. Relative instance
/// directories are resolved against base_dir.
AppConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

/// Solver configuration for a variant, filling alpha/beta with the variant defaults when unset.
SolverConfigd make_solver_config(const SolverSettings& s, Variant variant, std::uint64_t seed);

/// Canonical JSON echo of a configuration.
std::string dump_config(const AppConfig& c);

}  // namespace ptycho
