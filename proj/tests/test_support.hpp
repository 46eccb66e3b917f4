#pragma once

// Shared helpers for the unit tests: random fields and naive reference
// implementations that deliberately avoid the library's code paths.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/model.hpp"

namespace ptycho::testing {

using cd = std::complex<double>;

inline ComplexImaged random_field(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  ComplexImaged out(n);
  for (Index i = 0; i < out.size(); ++i) out[i] = cd(gauss(rng), gauss(rng));
  return out;
}

inline RealImaged random_magnitudes(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  RealImaged out(n);
  for (Index i = 0; i < out.size(); ++i) out[i] = u(rng);
  return out;
}

inline ScanGeometry random_geometry(Index n, Index m, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Offset> offsets;
  for (Index j = 0; j < m; ++j) offsets.push_back({pick(rng), pick(rng)});
  return ScanGeometry(n, offsets);
}

inline FrameStackd random_stack(Index n, Index m, std::mt19937_64& rng) {
  FrameStackd z;
  for (Index j = 0; j < m; ++j) z.push_back(random_field(n, rng));
  return z;
}

/// Direct O(n^2) summation of the orthonormal 2-D DFT.
inline ComplexImaged naive_dft(const ComplexImaged& v, int sign = -1) {
  const Index n = v.side();
  ComplexImaged out(n);
  for (Index k1 = 0; k1 < n; ++k1)
    for (Index k2 = 0; k2 < n; ++k2) {
      cd acc = 0;
      for (Index p1 = 0; p1 < n; ++p1)
        for (Index p2 = 0; p2 < n; ++p2) {
          const double angle = sign * 2.0 * std::numbers::pi * double(k1 * p1 + k2 * p2) / double(n);
          acc += v(p1, p2) * cd(std::cos(angle), std::sin(angle));
        }
      out(k1, k2) = acc / double(n);
    }
  return out;
}

/// Scalar double loop for F with explicit modular index arithmetic.
inline double naive_objective(const ComplexImaged& x, const ComplexImaged& y, const FrameStackd& z,
                              const ScanGeometry& geom) {
  const Index n = x.side();
  double total = 0;
  for (Index j = 0; j < geom.count(); ++j) {
    const Offset o = geom.offsets()[std::size_t(j)];
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) {
        // (S_j x)(r, c) = x(r - o.row, c - o.col)
        const cd sx = x((r - o.row + n) % n, (c - o.col + n) % n);
        total += std::norm(sx * y(r, c) - z[std::size_t(j)](r, c));
      }
  }
  return total;
}

inline double max_abs_diff(const ComplexImaged& a, const ComplexImaged& b) {
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace ptycho::testing
