#pragma once

// Synthetic instances: scan grids, disk probes, a smooth test object, exact
// far-field magnitudes, Poisson photon noise and random feasible objects.

#include <cstdint>
#include <optional>

#include "ptycho/model.hpp"

namespace ptycho {

/// g x g offsets (r * stride, c * stride), r, c in [0, g), reduced mod N.
ScanGeometry make_scan_grid(Index side, Index grid, Index stride);

/// Disk of the given radius about (N/2, N/2); radius 0 is the center pixel.
SupportMask make_disk_mask(Index side, double radius);

struct ProbeDisk {
  ComplexImaged probe;
  ProbeConstraintd constraint;
};

/// Constant-amplitude disk probe; the constraint support is a disk of
/// support_radius (defaults to radius) with cap R = amplitude.
ProbeDisk make_probe_disk(Index side, double radius, double amplitude,
                          std::optional<double> support_radius = std::nullopt);

/// Multiplies the probe by exp(i strength rho^2 / radius^2), rho measured from (N/2, N/2).
ComplexImaged apply_defocus(const ComplexImaged& probe, double radius, double strength);

/// Radial amplitude 1 - 0.5 min(rho / (N/2), 1) with a smooth periodic phase.
ComplexImaged make_test_object(Index side);

/// b_j = |F(S_j(x) . y)|.
MeasurementSetd forward_measurements(const ComplexImaged& x, const ComplexImaged& y, const ScanGeometry& geom);

/// counts ~ Poisson(scale * b^2) per pixel, returned as sqrt(counts / scale).
/// Frame j draws from its own generator seeded by (seed, j).
MeasurementSetd add_poisson_noise(const MeasurementSetd& meas, double scale, std::uint64_t seed);

/// Scale for which the brightest pixel has an expected count of peak_count.
double poisson_scale_for_peak(const MeasurementSetd& meas, double peak_count);

/// Uniform magnitude in [lo, hi] and uniform phase on supported pixels, zero elsewhere.
ComplexImaged random_object_init(Index side, const ObjectConstraintd& c, std::uint64_t seed);

/// Parameters of the default synthetic instance.
struct SimulationParams {
  Index side = 64;
  Index grid = 5;
  Index stride = 12;
  double probe_radius = 16;
  double probe_amplitude = 1.0;
  double probe_defocus = 1.0;
  /// Radius of the probe support constraint; defaults to probe_radius + 2.
  std::optional<double> constraint_radius;
  double amplitude_cap = 1.5;
  double object_amp_lo = 0.45;
  double object_amp_hi = 1.0;
  /// Poisson rate scale; takes precedence over noise_peak_count.
  std::optional<double> noise_scale;
  std::optional<double> noise_peak_count;
  double floor_x = 1e-12;
  double floor_y = 1e-12;

  void validate() const;
};

struct SimulatedInstance {
  ProblemInstanced problem;
  ComplexImaged true_probe;
  ComplexImaged true_object;
  /// Noiseless magnitudes; equal to problem.measurements without noise.
  MeasurementSetd clean;
  std::optional<double> noise_scale;
};

SimulatedInstance simulate_instance(const SimulationParams& params, std::uint64_t seed);

}  // namespace ptycho
