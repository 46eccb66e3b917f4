#include "ptycho/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ptycho/parallel.hpp"

namespace ptycho {

namespace {

double radius_from_center(Index side, Index r, Index c) {
  const double dr = double(r) - double(side / 2);
  const double dc = double(c) - double(side / 2);
  return std::sqrt(dr * dr + dc * dc);
}

}  // namespace

ScanGeometry make_scan_grid(Index side, Index grid, Index stride) {
  if (side <= 0) throw DimensionError("grid side must be positive");
  if (grid < 1) throw ParameterError("scan grid needs at least one position per axis");
  if (stride < 0) throw ParameterError("scan stride must be nonnegative");
  std::vector<Offset> offsets;
  for (Index r = 0; r < grid; ++r)
    for (Index c = 0; c < grid; ++c) offsets.push_back({r * stride, c * stride});
  return ScanGeometry(side, std::move(offsets));
}

SupportMask make_disk_mask(Index side, double radius) {
  if (!(radius >= 0)) throw ParameterError("disk radius must be nonnegative");
  SupportMask mask(side);
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) mask(r, c) = radius_from_center(side, r, c) <= radius;
  return mask;
}

ProbeDisk make_probe_disk(Index side, double radius, double amplitude, std::optional<double> support_radius) {
  if (!(amplitude > 0) || !std::isfinite(amplitude)) throw ParameterError("probe amplitude must be positive");
  const auto disk = make_disk_mask(side, radius);
  ProbeDisk out{ComplexImaged(side), {make_disk_mask(side, support_radius.value_or(radius)), amplitude}};
  for (Index i = 0; i < disk.size(); ++i)
    if (disk[i]) out.probe[i] = amplitude;
  out.constraint.validate();
  return out;
}

ComplexImaged apply_defocus(const ComplexImaged& probe, double radius, double strength) {
  if (!(radius > 0)) throw ParameterError("defocus radius must be positive");
  const Index n = probe.side();
  ComplexImaged out = probe;
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      const double rho = radius_from_center(n, r, c);
      out(r, c) *= std::polar(1.0, strength * rho * rho / (radius * radius));
    }
  return out;
}

ComplexImaged make_test_object(Index side) {
  using std::numbers::pi;
  ComplexImaged out(side);
  const double half = double(side) / 2;
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) {
      const double dr = double(r) - half, dc = double(c) - half;
      const double rho = std::sqrt(dr * dr + dc * dc) / half;
      const double amp = 1.0 - 0.5 * std::min(rho, 1.0);
      const double phase = 0.8 * std::sin(2 * pi * double(c) / double(side)) * std::cos(2 * pi * double(r) / double(side)) +
                           0.5 * std::cos(4 * pi * double(r) / double(side));
      out(r, c) = std::polar(amp, phase);
    }
  return out;
}

MeasurementSetd forward_measurements(const ComplexImaged& x, const ComplexImaged& y, const ScanGeometry& geom) {
  require_same_side(x, y);
  if (x.side() != geom.side()) throw DimensionError("field side differs from scan geometry");
  MeasurementSetd meas{std::vector<RealImaged>(static_cast<std::size_t>(geom.count())), geom};
  parallel_for(geom.count(), [&](Index j) {
    meas.magnitudes[static_cast<std::size_t>(j)] = abs(fft2(hadamard(shift(x, j, geom), y)));
  });
  return meas;
}

MeasurementSetd add_poisson_noise(const MeasurementSetd& meas, double scale, std::uint64_t seed) {
  if (!(scale > 0) || !std::isfinite(scale)) throw ParameterError("Poisson scale must be finite and positive");
  meas.validate();
  MeasurementSetd out = meas;
  parallel_for(meas.count(), [&](Index j) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(j)};
    std::mt19937_64 rng(seq);
    auto& b = out.magnitudes[static_cast<std::size_t>(j)];
    for (Index i = 0; i < b.size(); ++i) {
      const double rate = scale * b[i] * b[i];
      if (rate == 0) continue;
      std::poisson_distribution<long long> draw(rate);
      b[i] = std::sqrt(double(draw(rng)) / scale);
    }
  });
  return out;
}

double poisson_scale_for_peak(const MeasurementSetd& meas, double peak_count) {
  if (!(peak_count > 0)) throw ParameterError("peak count must be positive");
  double peak = 0;
  for (const auto& b : meas.magnitudes) peak = std::max(peak, b.array().square().maxCoeff());
  if (!(peak > 0)) throw ParameterError("cannot calibrate noise on all-zero measurements");
  return peak_count / peak;
}

ComplexImaged random_object_init(Index side, const ObjectConstraintd& c, std::uint64_t seed) {
  c.validate();
  if (c.support.side() != side) throw DimensionError("object support side differs from requested side");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(c.amp_lo, c.amp_hi);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  ComplexImaged out(side);
  for (Index i = 0; i < out.size(); ++i) {
    const double m = mag(rng);
    const double p = phase(rng);
    if (c.support[i]) out[i] = std::polar(m, p);
  }
  return out;
}

void SimulationParams::validate() const {
  if (side <= 0) throw ParameterError("side must be positive");
  if (grid < 1 || stride < 0) throw ParameterError("scan grid must be >= 1 with nonnegative stride");
  if (!(probe_radius >= 0)) throw ParameterError("probe radius must be nonnegative");
  if (!(probe_amplitude > 0)) throw ParameterError("probe amplitude must be positive");
  if (constraint_radius && !(*constraint_radius >= 0)) throw ParameterError("constraint radius must be nonnegative");
  if (!(amplitude_cap > 0)) throw ParameterError("amplitude cap must be positive");
  if (!(object_amp_lo >= 0) || !(object_amp_hi >= object_amp_lo)) throw ParameterError("object bounds invalid");
  if (noise_scale && !(*noise_scale > 0)) throw ParameterError("noise scale must be positive");
  if (noise_peak_count && !(*noise_peak_count > 0)) throw ParameterError("noise peak count must be positive");
  if (!(floor_x > 0) || !(floor_y > 0)) throw ParameterError("Lipschitz floors must be positive");
}

SimulatedInstance simulate_instance(const SimulationParams& params, std::uint64_t seed) {
  params.validate();
  const Index n = params.side;
  const auto geom = make_scan_grid(n, params.grid, params.stride);
  auto disk = make_probe_disk(n, params.probe_radius, params.probe_amplitude,
                              params.constraint_radius.value_or(params.probe_radius + 2));
  disk.constraint.amplitude_cap = params.amplitude_cap;

  SimulatedInstance out;
  out.true_probe = params.probe_radius > 0 ? apply_defocus(disk.probe, params.probe_radius, params.probe_defocus)
                                           : disk.probe;
  out.true_object = make_test_object(n);
  out.clean = forward_measurements(out.true_probe, out.true_object, geom);

  out.problem.probe = disk.constraint;
  out.problem.object = {SupportMask::Constant(n, true), params.object_amp_lo, params.object_amp_hi};
  out.problem.floors = {params.floor_x, params.floor_y};
  out.problem.measurements = out.clean;
  if (params.noise_scale || params.noise_peak_count) {
    out.noise_scale = params.noise_scale ? *params.noise_scale : poisson_scale_for_peak(out.clean, *params.noise_peak_count);
    out.problem.measurements = add_poisson_noise(out.clean, *out.noise_scale, seed);
  }
  out.problem.validate();
  return out;
}

}  // namespace ptycho
