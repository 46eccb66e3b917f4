#pragma once

// Coupling objective F(x, y, z) = sum_j || S_j(x) . y - z_j ||^2, its partial
// gradients with respect to the real coordinates of x and y, and the exact
// per-pixel / per-block / whole-block Lipschitz moduli of those gradients.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ptycho/field.hpp"

namespace ptycho {

using SupportMask = Image<bool>;

template <typename Scalar>
using FrameStack = std::vector<ComplexImage<Scalar>>;

template <typename Scalar>
struct ProbeConstraint {
  SupportMask support;
  Scalar amplitude_cap = Scalar(1);

  void validate() const {
    if (support.empty() || !support.array().any()) throw ParameterError("probe support is empty");
    if (!(amplitude_cap > 0) || !std::isfinite(amplitude_cap))
      throw ParameterError("probe amplitude cap must be finite and positive");
  }
};

template <typename Scalar>
struct ObjectConstraint {
  SupportMask support;
  Scalar amp_lo = Scalar(0);
  Scalar amp_hi = Scalar(1);

  void validate() const {
    if (support.empty() || !support.array().any()) throw ParameterError("object support is empty");
    if (!(amp_lo >= 0) || !(amp_hi >= amp_lo) || !std::isfinite(amp_hi))
      throw ParameterError("object amplitude bounds must satisfy 0 <= lo <= hi < inf");
  }
};

template <typename Scalar>
struct MeasurementSet {
  std::vector<RealImage<Scalar>> magnitudes;
  ScanGeometry geometry;

  Index count() const { return static_cast<Index>(magnitudes.size()); }

  void validate() const {
    if (count() != geometry.count())
      throw DimensionError("measurement count differs from scan geometry");
    for (const auto& b : magnitudes) {
      if (b.side() != geometry.side()) throw DimensionError("measurement side differs from geometry");
      if (!b.allFinite() || (b.array() < 0).any())
        throw ParameterError("measurements must be finite and nonnegative");
    }
  }
};

/// Positive floors applied to the Lipschitz moduli before they are used as step scalars.
template <typename Scalar>
struct LipschitzFloors {
  Scalar x = Scalar(1e-12);
  Scalar y = Scalar(1e-12);
};

template <typename Scalar>
struct ProblemInstance {
  ProbeConstraint<Scalar> probe;
  ObjectConstraint<Scalar> object;
  MeasurementSet<Scalar> measurements;
  LipschitzFloors<Scalar> floors;

  Index side() const { return measurements.geometry.side(); }
  const ScanGeometry& geometry() const { return measurements.geometry; }

  void validate() const {
    probe.validate();
    object.validate();
    measurements.validate();
    if (probe.support.side() != side() || object.support.side() != side())
      throw DimensionError("constraint supports and measurements disagree on side");
    if (!(floors.x > 0) || !(floors.y > 0)) throw ParameterError("Lipschitz floors must be positive");
  }
};

using ProbeConstraintd = ProbeConstraint<double>;
using ObjectConstraintd = ObjectConstraint<double>;
using MeasurementSetd = MeasurementSet<double>;
using ProblemInstanced = ProblemInstance<double>;
using FrameStackd = FrameStack<double>;

namespace detail {

template <typename Scalar>
void check_operands(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                    const FrameStack<Scalar>& z, const ScanGeometry& geom) {
  require_same_side(x, y);
  if (x.side() != geom.side()) throw DimensionError("field side differs from scan geometry");
  if (static_cast<Index>(z.size()) != geom.count())
    throw DimensionError("exit-wave count differs from scan geometry");
  for (const auto& zj : z) require_same_side(x, zj);
}

inline Index wrap(Index v, Index n) { return v >= n ? v - n : v; }

}  // namespace detail

template <typename Scalar>
Scalar objective(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                 const FrameStack<Scalar>& z, const ScanGeometry& geom) {
  detail::check_operands(x, y, z, geom);
  Scalar total = 0;
  for (Index j = 0; j < geom.count(); ++j) {
    const auto sx = shift(x, j, geom);
    total += (sx.array() * y.array() - z[static_cast<std::size_t>(j)].array()).abs2().sum();
  }
  return total;
}

/// sum_j S_j^*(|y|^2): half the per-pixel Lipschitz modulus of grad_x.
template <typename Scalar>
RealImage<Scalar> probe_illumination(const ComplexImage<Scalar>& y, const ScanGeometry& geom) {
  const auto y2 = abs2(y);
  RealImage<Scalar> acc(y.side());
  for (Index j = 0; j < geom.count(); ++j) acc.array() += shift_adjoint(y2, j, geom).array();
  return acc;
}

/// sum_j S_j(|x|^2): half the per-pixel Lipschitz modulus of grad_y.
template <typename Scalar>
RealImage<Scalar> object_illumination(const ComplexImage<Scalar>& x, const ScanGeometry& geom) {
  const auto x2 = abs2(x);
  RealImage<Scalar> acc(x.side());
  for (Index j = 0; j < geom.count(); ++j) acc.array() += shift(x2, j, geom).array();
  return acc;
}

/// grad_x F = 2 [ (sum_j S_j^*(conj(y) y)) . x - sum_j S_j^*(conj(y) . z_j) ].
template <typename Scalar>
ComplexImage<Scalar> grad_x(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                            const FrameStack<Scalar>& z, const ScanGeometry& geom) {
  detail::check_operands(x, y, z, geom);
  const auto illum = probe_illumination(y, geom);
  const auto ybar = conj(y);
  ComplexImage<Scalar> back(x.side());
  for (Index j = 0; j < geom.count(); ++j)
    back.array() += shift_adjoint(hadamard(ybar, z[static_cast<std::size_t>(j)]), j, geom).array();
  return ComplexImage<Scalar>(x.side(), (Scalar(2) * (illum.array() * x.array() - back.array())).eval());
}

/// grad_y F = 2 [ (sum_j S_j(conj(x) x)) . y - sum_j S_j(conj(x)) . z_j ].
template <typename Scalar>
ComplexImage<Scalar> grad_y(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                            const FrameStack<Scalar>& z, const ScanGeometry& geom) {
  detail::check_operands(x, y, z, geom);
  const auto illum = object_illumination(x, geom);
  const auto xbar = conj(x);
  ComplexImage<Scalar> back(x.side());
  for (Index j = 0; j < geom.count(); ++j)
    back.array() += shift(xbar, j, geom).array() * z[static_cast<std::size_t>(j)].array();
  return ComplexImage<Scalar>(x.side(), (Scalar(2) * (illum.array() * y.array() - back.array())).eval());
}

/// Partial gradient at probe pixel i, evaluated directly from the residuals
/// S_j(x) . y - z_j at the positions pixel i is shifted to. Reads x only at i.
template <typename Scalar>
std::complex<Scalar> grad_x_pixel(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                                  const FrameStack<Scalar>& z, const ScanGeometry& geom, Index i) {
  const Index n = x.side();
  if (i < 0 || i >= x.size()) throw IndexError("pixel index out of range");
  const Index r = i / n, c = i % n;
  std::complex<Scalar> g{};
  for (Index j = 0; j < geom.count(); ++j) {
    const Offset& o = geom.offsets()[static_cast<std::size_t>(j)];
    const Index p = detail::wrap(r + o.row, n) * n + detail::wrap(c + o.col, n);
    const auto yp = y[p];
    g += std::conj(yp) * (x[i] * yp - z[static_cast<std::size_t>(j)][p]);
  }
  return Scalar(2) * g;
}

/// Partial gradient at object pixel i; reads y only at i.
template <typename Scalar>
std::complex<Scalar> grad_y_pixel(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                                  const FrameStack<Scalar>& z, const ScanGeometry& geom, Index i) {
  const Index n = x.side();
  if (i < 0 || i >= x.size()) throw IndexError("pixel index out of range");
  const Index r = i / n, c = i % n;
  std::complex<Scalar> g{};
  for (Index j = 0; j < geom.count(); ++j) {
    const Offset& o = geom.offsets()[static_cast<std::size_t>(j)];
    const Index q = detail::wrap(r + n - o.row, n) * n + detail::wrap(c + n - o.col, n);
    const auto xq = x[q];
    g += std::conj(xq) * (xq * y[i] - z[static_cast<std::size_t>(j)][i]);
  }
  return Scalar(2) * g;
}

template <typename Scalar>
RealImage<Scalar> lipschitz_x_pixel(const ComplexImage<Scalar>& y, const ScanGeometry& geom) {
  auto illum = probe_illumination(y, geom);
  illum.array() *= Scalar(2);
  return illum;
}

template <typename Scalar>
RealImage<Scalar> lipschitz_y_pixel(const ComplexImage<Scalar>& x, const ScanGeometry& geom) {
  auto illum = object_illumination(x, geom);
  illum.array() *= Scalar(2);
  return illum;
}

template <typename Scalar>
Scalar lipschitz_x_global(const ComplexImage<Scalar>& y, const ScanGeometry& geom) {
  return lipschitz_x_pixel(y, geom).array().maxCoeff();
}

template <typename Scalar>
Scalar lipschitz_y_global(const ComplexImage<Scalar>& x, const ScanGeometry& geom) {
  return lipschitz_y_pixel(x, geom).array().maxCoeff();
}

/// Block modulus: the sup-norm of the per-pixel moduli over the block's pixels.
template <typename Scalar>
Scalar lipschitz_block(const RealImage<Scalar>& pixel_moduli, std::span<const Index> block) {
  if (block.empty()) throw ParameterError("empty block");
  Scalar best = 0;
  for (Index i : block) {
    if (i < 0 || i >= pixel_moduli.size()) throw IndexError("block pixel index out of range");
    best = std::max(best, pixel_moduli[i]);
  }
  return best;
}

template <typename Scalar>
Scalar lipschitz_x_block(const ComplexImage<Scalar>& y, const ScanGeometry& geom,
                         std::span<const Index> block) {
  return lipschitz_block(lipschitz_x_pixel(y, geom), block);
}

template <typename Scalar>
Scalar lipschitz_y_block(const ComplexImage<Scalar>& x, const ScanGeometry& geom,
                         std::span<const Index> block) {
  return lipschitz_block(lipschitz_y_pixel(x, geom), block);
}

}  // namespace ptycho
