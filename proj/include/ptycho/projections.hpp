#pragma once

// Exact projectors onto the probe set X, the object set Y and the Fourier
// modulus sets Z_j, plus the proximal z-step. Where the true projector is
// set-valued (zero input onto an annulus, zero Fourier coefficient) the phase
// 0 element is selected.

#include <cmath>
#include <complex>
#include <limits>

#include "ptycho/model.hpp"
#include "ptycho/parallel.hpp"

namespace ptycho {

namespace detail {

/// w scaled radially to magnitude target (|w| = m > 0), nudged by single ulps
/// so the rounded result lies on the requested side of target.
template <typename Scalar>
std::complex<Scalar> rescale(const std::complex<Scalar>& w, Scalar m, Scalar target, bool inward) {
  auto out = w * (target / m);
  const Scalar step = inward ? Scalar(1) - std::numeric_limits<Scalar>::epsilon()
                             : Scalar(1) + std::numeric_limits<Scalar>::epsilon();
  for (int guard = 0; guard < 4 && (inward ? std::abs(out) > target : std::abs(out) < target); ++guard) out *= step;
  return out;
}

}  // namespace detail

/// Radial clamp of one complex value into the annulus lo <= |w| <= hi.
template <typename Scalar>
std::complex<Scalar> clamp_to_annulus(const std::complex<Scalar>& w, Scalar lo, Scalar hi) {
  const Scalar m = std::abs(w);
  if (m == Scalar(0)) return {lo, Scalar(0)};
  if (m < lo) return detail::rescale(w, m, lo, false);
  if (m > hi) return detail::rescale(w, m, hi, true);
  return w;
}

/// Projection of pixel i onto X_i.
template <typename Scalar>
std::complex<Scalar> project_probe_pixel(const std::complex<Scalar>& w, Index i, const ProbeConstraint<Scalar>& c) {
  if (!c.support[i]) return {};
  const Scalar m = std::abs(w);
  return m > c.amplitude_cap ? detail::rescale(w, m, c.amplitude_cap, true) : w;
}

/// Projection of pixel i onto Y_i.
template <typename Scalar>
std::complex<Scalar> project_object_pixel(const std::complex<Scalar>& w, Index i, const ObjectConstraint<Scalar>& c) {
  if (!c.support[i]) return {};
  return clamp_to_annulus(w, c.amp_lo, c.amp_hi);
}

/// Pixel-wise projection onto {|x| <= R} inside the support and {0} outside.
template <typename Scalar>
ComplexImage<Scalar> project_probe(const ComplexImage<Scalar>& v, const ProbeConstraint<Scalar>& c) {
  require_same_side(v, c.support);
  ComplexImage<Scalar> out(v.side());
  for (Index i = 0; i < v.size(); ++i) out[i] = project_probe_pixel(v[i], i, c);
  return out;
}

/// Pixel-wise projection onto the annulus [lo, hi] inside the support and {0} outside.
template <typename Scalar>
ComplexImage<Scalar> project_object(const ComplexImage<Scalar>& v, const ObjectConstraint<Scalar>& c) {
  require_same_side(v, c.support);
  ComplexImage<Scalar> out(v.side());
  for (Index i = 0; i < v.size(); ++i) out[i] = project_object_pixel(v[i], i, c);
  return out;
}

template <typename Scalar>
bool in_probe_set(const ComplexImage<Scalar>& v, const ProbeConstraint<Scalar>& c, Scalar tol = 0) {
  require_same_side(v, c.support);
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar m = std::abs(v[i]);
    if (c.support[i] ? m > c.amplitude_cap + tol : m > tol) return false;
  }
  return true;
}

template <typename Scalar>
bool in_object_set(const ComplexImage<Scalar>& v, const ObjectConstraint<Scalar>& c, Scalar tol = 0) {
  require_same_side(v, c.support);
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar m = std::abs(v[i]);
    if (c.support[i] ? (m < c.amp_lo - tol || m > c.amp_hi + tol) : m > tol) return false;
  }
  return true;
}

/// P_Z(v) = F^{-1}(b . F(v) / |F(v)|), with b at zero coefficients.
template <typename Scalar>
ComplexImage<Scalar> project_modulus(const ComplexImage<Scalar>& v, const RealImage<Scalar>& b) {
  require_same_side(v, b);
  auto spectrum = fft2(v);
  for (Index k = 0; k < spectrum.size(); ++k) {
    const Scalar m = std::abs(spectrum[k]);
    spectrum[k] = m != Scalar(0) ? spectrum[k] * (b[k] / m) : std::complex<Scalar>(b[k], Scalar(0));
  }
  return ifft2(spectrum);
}

/// Largest | |F(v)| - b | over pixels.
template <typename Scalar>
Scalar modulus_residual(const ComplexImage<Scalar>& v, const RealImage<Scalar>& b) {
  require_same_side(v, b);
  return (fft2(v).array().abs() - b.array()).abs().maxCoeff();
}

/// z_j <- P_{Z_j}( 2/(2+gamma) S_j(x) . y + gamma/(2+gamma) z_j ) for every frame.
template <typename Scalar>
FrameStack<Scalar> z_update(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y,
                            const FrameStack<Scalar>& z_prev, const MeasurementSet<Scalar>& meas,
                            Scalar gamma) {
  if (!(gamma > 0)) throw ParameterError("gamma must be positive");
  const ScanGeometry& geom = meas.geometry;
  detail::check_operands(x, y, z_prev, geom);
  if (meas.count() != geom.count()) throw DimensionError("measurement count differs from geometry");
  const Scalar w_model = Scalar(2) / (Scalar(2) + gamma);
  const Scalar w_prev = gamma / (Scalar(2) + gamma);
  FrameStack<Scalar> out(z_prev.size());
  parallel_for(geom.count(), [&](Index j) {
    const auto jj = static_cast<std::size_t>(j);
    ComplexImage<Scalar> blend(x.side(),
                               (w_model * shift(x, j, geom).array() * y.array() + w_prev * z_prev[jj].array()).eval());
    out[jj] = project_modulus(blend, meas.magnitudes[jj]);
  });
  return out;
}

}  // namespace ptycho
