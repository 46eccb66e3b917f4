#pragma once

// Subcommands behind the `ptycho` executable.
//
// Exit codes: 0 success, 1 command-line usage error, 2 invalid configuration
// or parameters, 3 numerical abort (non-finite iterate), 4 file error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ptycho/config.hpp"
#include "ptycho/io.hpp"

namespace ptycho::cli {

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
};

/// Applies --seed / --variant on top of a loaded config.
AppConfig apply_overrides(AppConfig c, const Overrides& o);

/// The configured instance: loaded from its directory or simulated from the config seed.
io::StoredInstance resolve_instance(const AppConfig& c);

void cmd_simulate(const AppConfig& c, const fs::path& out, std::ostream& log);
/// Returns the exit code (0, or 3 after a numerical abort).
int cmd_reconstruct(const AppConfig& c, const fs::path& out, std::ostream& log);
void cmd_benchmark(const AppConfig& c, const fs::path& out, std::ostream& log);
/// Recomputes metrics for the probe.cimg / object.cimg (and trace.csv, if present) in `input`.
void cmd_metrics(const AppConfig& c, const fs::path& input, const fs::path& out, std::ostream& log);

int main(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace ptycho::cli
