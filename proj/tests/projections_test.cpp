#include <gtest/gtest.h>

#include <numbers>

#include "ptycho/projections.hpp"
#include "test_support.hpp"

namespace ptycho {
namespace {

using testing::cd;
using std::numbers::pi;

ProbeConstraintd probe_c(Index n, double cap, std::mt19937_64& rng) {
  SupportMask s(n);
  std::bernoulli_distribution coin(0.6);
  for (Index i = 0; i < s.size(); ++i) s[i] = coin(rng);
  s[0] = true;
  return {s, cap};
}

ObjectConstraintd object_c(Index n, double lo, double hi, std::mt19937_64& rng) {
  auto p = probe_c(n, 1.0, rng);
  return {p.support, lo, hi};
}

/// Random feasible point of Z_j: magnitudes b with uniformly random phases.
ComplexImaged random_in_z(const RealImaged& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0, 2 * pi);
  ComplexImaged f(b.side());
  for (Index k = 0; k < b.size(); ++k) f[k] = std::polar(b[k], phase(rng));
  return ifft2(f);
}

TEST(ProjectProbe, Examples) {
  ProbeConstraintd c{SupportMask::Constant(1, true), 1.0};
  EXPECT_EQ(project_probe(ComplexImaged::Constant(1, 2.0), c)[0], cd(1.0));
  EXPECT_EQ(project_probe(ComplexImaged::Constant(1, cd(0, 0.5)), c)[0], cd(0, 0.5));
  ProbeConstraintd outside{SupportMask(2), 1.0};
  outside.support[3] = true;
  const auto p = project_probe(ComplexImaged::Constant(2, cd(0.3, 0.1)), outside);
  for (Index i = 0; i < 3; ++i) EXPECT_EQ(p[i], cd(0.0));
}

TEST(ProjectObject, Examples) {
  ObjectConstraintd c{SupportMask::Constant(1, true), 0.5, 2.0};
  const auto big = project_object(ComplexImaged::Constant(1, std::polar(3.0, 1.1)), c)[0];
  EXPECT_NEAR(std::abs(big), 2.0, 1e-15);
  EXPECT_NEAR(std::arg(big), 1.1, 1e-15);
  const auto small = project_object(ComplexImaged::Constant(1, std::polar(0.1, pi / 4)), c)[0];
  EXPECT_NEAR(std::abs(small - std::polar(0.5, pi / 4)), 0.0, 1e-15);
  EXPECT_EQ(project_object(ComplexImaged(1), c)[0], cd(0.5, 0.0));
}

TEST(ProjectObject, ZeroTieBreakIsAtMinimalDistance) {
  // Every point of the inner circle is at distance lo from 0; a phase grid finds nothing closer.
  const double lo = 0.5;
  double best = 1e9;
  for (int k = 0; k < 720; ++k)
    for (double r : {0.5, 0.75, 1.0, 2.0}) best = std::min(best, std::abs(std::polar(r, 2 * pi * k / 720.0)));
  EXPECT_NEAR(best, lo, 1e-15);
  EXPECT_NEAR(std::abs(clamp_to_annulus(cd(0), lo, 2.0)), best, 1e-15);
}

TEST(ProjectModulus, DeltaWithUnitMagnitudes) {
  ComplexImaged delta(2);
  delta(0, 0) = 1.0;
  const auto out = project_modulus(delta, RealImaged::Constant(2, 1.0));
  EXPECT_NEAR(std::abs(out(0, 0) - 2.0), 0.0, 1e-15);
  for (Index i = 1; i < 4; ++i) EXPECT_NEAR(std::abs(out[i]), 0.0, 1e-15);
}

TEST(ProjectModulus, ZeroCoefficientUsesPhaseZero) {
  const auto out = project_modulus(ComplexImaged(3), RealImaged::Constant(3, 2.0));
  const auto spec = fft2(out);
  for (Index k = 0; k < 9; ++k) EXPECT_NEAR(std::abs(spec[k] - cd(2.0, 0.0)), 0.0, 1e-14);
}

TEST(ProjectModulus, MatchesMagnitudesAndFixesMembers) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = testing::random_field(6, rng);
    const auto b = testing::random_magnitudes(6, rng);
    const auto p = project_modulus(v, b);
    EXPECT_LE(modulus_residual(p, b), 1e-10);
    EXPECT_LE(std::sqrt(squared_distance(project_modulus(p, b), p)), 1e-12 * std::sqrt(squared_norm(p)));
    const auto member = random_in_z(b, rng);
    EXPECT_LE(std::sqrt(squared_distance(project_modulus(member, b), member)), 1e-12 * std::sqrt(squared_norm(member)));
  }
}

TEST(ProjectModulus, BeatsPhaseGridOracle) {
  // In Fourier space Z_j is a product of circles; the nearest point on each
  // circle, searched over 64 phases, can never beat the projector.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto v = testing::random_field(4, rng);
    const auto b = testing::random_magnitudes(4, rng);
    const auto fv = fft2(v);
    ComplexImaged best(4);
    for (Index k = 0; k < fv.size(); ++k) {
      double dmin = 1e300;
      for (int s = 0; s < 64; ++s) {
        const auto cand = std::polar(b[k], 2 * pi * s / 64.0);
        if (std::abs(cand - fv[k]) < dmin) {
          dmin = std::abs(cand - fv[k]);
          best[k] = cand;
        }
      }
    }
    const double grid = squared_distance(ifft2(best), v);
    const double proj = squared_distance(project_modulus(v, b), v);
    EXPECT_LE(proj, grid + 1e-12);
    // A phase error of at most pi/64 per coefficient bounds how far the oracle can trail.
    double slack = 0;
    for (Index k = 0; k < fv.size(); ++k) slack += 2 * std::abs(fv[k]) * b[k] * (1 - std::cos(pi / 64));
    EXPECT_LE(grid - proj, slack + 1e-12);
  }
}

TEST(Projections, IdempotentAndFeasible) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = testing::random_field(7, rng, 1.5);
    const auto pc = probe_c(7, 0.8, rng);
    const auto oc = object_c(7, 0.4, 1.2, rng);
    const auto px = project_probe(v, pc);
    const auto py = project_object(v, oc);
    EXPECT_TRUE(in_probe_set(px, pc));
    EXPECT_TRUE(in_object_set(py, oc));
    EXPECT_LE(testing::max_abs_diff(project_probe(px, pc), px), 1e-12);
    EXPECT_LE(testing::max_abs_diff(project_object(py, oc), py), 1e-12);
  }
}

TEST(Projections, BeatRandomFeasibleCandidates) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_real_distribution<double> ph(0, 2 * pi);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = testing::random_field(5, rng, 1.5);
    const auto pc = probe_c(5, 0.8, rng);
    const auto oc = object_c(5, 0.4, 1.2, rng);
    const auto b = testing::random_magnitudes(5, rng);
    const double dx = squared_distance(project_probe(v, pc), v);
    const double dy = squared_distance(project_object(v, oc), v);
    const double dz = squared_distance(project_modulus(v, b), v);
    for (int s = 0; s < 1000; ++s) {
      ComplexImaged cx(5), cy(5);
      for (Index i = 0; i < 25; ++i) {
        if (pc.support[i]) cx[i] = std::polar(pc.amplitude_cap * std::sqrt(u(rng)), ph(rng));
        if (oc.support[i]) cy[i] = std::polar(oc.amp_lo + (oc.amp_hi - oc.amp_lo) * u(rng), ph(rng));
      }
      ASSERT_LE(dx, squared_distance(cx, v));
      ASSERT_LE(dy, squared_distance(cy, v));
      ASSERT_LE(dz, squared_distance(random_in_z(b, rng), v) + 1e-12);
    }
  }
}

TEST(ZUpdate, TinyGammaIsPlainModulusProjection) {
  std::mt19937_64 rng(7);
  const auto g = testing::random_geometry(6, 3, rng);
  const auto x = testing::random_field(6, rng), y = testing::random_field(6, rng);
  const auto z = testing::random_stack(6, 3, rng);
  MeasurementSetd meas{{testing::random_magnitudes(6, rng), testing::random_magnitudes(6, rng),
                        testing::random_magnitudes(6, rng)},
                       g};
  const auto out = z_update(x, y, z, meas, 1e-30);
  for (Index j = 0; j < 3; ++j)
    EXPECT_LE(testing::max_abs_diff(out[std::size_t(j)], project_modulus(hadamard(shift(x, j, g), y), meas.magnitudes[std::size_t(j)])), 1e-14);
}

TEST(ZUpdate, ConsistentStateIsFixedForAnyGamma) {
  std::mt19937_64 rng(8);
  const auto g = testing::random_geometry(6, 3, rng);
  const auto x = testing::random_field(6, rng), y = testing::random_field(6, rng);
  FrameStackd z;
  MeasurementSetd meas{{}, g};
  for (Index j = 0; j < 3; ++j) {
    z.push_back(hadamard(shift(x, j, g), y));
    meas.magnitudes.push_back(abs(fft2(z.back())));
  }
  for (double gamma : {1e-30, 0.5, 1.0, 7.0}) {
    const auto out = z_update(x, y, z, meas, gamma);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_LE(testing::max_abs_diff(out[j], z[j]), 1e-12);
  }
  EXPECT_THROW(z_update(x, y, z, meas, 0.0), ParameterError);
}

TEST(ZUpdate, IsTheProximalMinimizer) {
  // z minimizes ||S x . y - z||^2 + gamma/2 ||z - z_prev||^2 over Z_j; compare with random members of Z_j.
  std::mt19937_64 rng(9);
  const auto g = testing::random_geometry(4, 1, rng);
  const auto x = testing::random_field(4, rng), y = testing::random_field(4, rng);
  const auto z = testing::random_stack(4, 1, rng);
  MeasurementSetd meas{{testing::random_magnitudes(4, rng)}, g};
  const double gamma = 0.7;
  const auto a = hadamard(shift(x, 0, g), y);
  auto cost = [&](const ComplexImaged& c) { return squared_distance(a, c) + 0.5 * gamma * squared_distance(c, z[0]); };
  const double best = cost(z_update(x, y, z, meas, gamma)[0]);
  for (int s = 0; s < 1000; ++s) ASSERT_LE(best, cost(random_in_z(meas.magnitudes[0], rng)) + 1e-12);
}

}  // namespace
}  // namespace ptycho
