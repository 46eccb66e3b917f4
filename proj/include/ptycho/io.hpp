#pragma once

// File formats: CIMG complex stacks, RIMG real stacks, trace CSV, 8-bit PGM
// previews, and on-disk problem instances (stacks plus a JSON sidecar).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ptycho/metrics.hpp"
#include "ptycho/model.hpp"

namespace ptycho::io {

namespace fs = std::filesystem;

/// "CIMG1\n", "N m\n", then m * N^2 little-endian float64 (re, im) pairs.
void write_cimg(std::ostream& out, const std::vector<ComplexImaged>& stack);
std::vector<ComplexImaged> read_cimg(std::istream& in);
void write_cimg(const fs::path& path, const std::vector<ComplexImaged>& stack);
std::vector<ComplexImaged> read_cimg(const fs::path& path);

/// "RIMG1\n", "N m\n", then m * N^2 little-endian float64 values.
void write_rimg(std::ostream& out, const std::vector<RealImaged>& stack);
std::vector<RealImaged> read_rimg(std::istream& in);
void write_rimg(const fs::path& path, const std::vector<RealImaged>& stack);
std::vector<RealImaged> read_rimg(const fs::path& path);

RealImaged mask_to_real(const SupportMask& mask);
/// Nonzero pixels are in the support.
SupportMask real_to_mask(const RealImaged& img);

/// Header `k,F,step_sq,decrease_slack,r_factor,elapsed_ms`, values with 17
/// significant digits. With timing off, elapsed_ms is written as 0.
void write_trace_csv(std::ostream& out, const std::vector<IterationTrace>& trace, bool timing = true);
void write_trace_csv(const fs::path& path, const std::vector<IterationTrace>& trace, bool timing = true);
std::vector<IterationTrace> read_trace_csv(std::istream& in);
std::vector<IterationTrace> read_trace_csv(const fs::path& path);

/// Binary 8-bit graymap of img linearly mapped from [lo, hi] to [0, 255].
void write_pgm(const fs::path& path, const RealImaged& img, double lo, double hi);
/// Amplitude (scaled to its maximum) and phase ([-pi, pi]) previews: <stem>_amp.pgm, <stem>_phase.pgm.
void write_preview(const fs::path& dir, const std::string& stem, const ComplexImaged& img);

struct StoredInstance {
  ProblemInstanced problem;
  std::optional<ComplexImaged> true_probe;
  std::optional<ComplexImaged> true_object;
  std::uint64_t seed = 0;
  std::optional<double> noise_scale;
};

/// Writes instance.json, measurements.rimg, probe_support.rimg,
/// object_support.rimg and, when present, truth_probe.cimg / truth_object.cimg.
void save_instance(const fs::path& dir, const StoredInstance& inst);
StoredInstance load_instance(const fs::path& dir);

}  // namespace ptycho::io
