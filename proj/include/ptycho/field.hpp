#pragma once

// Square complex/real fields on an N x N periodic grid, stored row-major as a
// flat Eigen array of length N^2. Everything here is a pure function of its
// inputs.

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "ptycho/error.hpp"

namespace ptycho {

using Index = Eigen::Index;

template <typename T>
class Image {
 public:
  using value_type = T;
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;

  Image() = default;

  explicit Image(Index side) : side_(side) {
    if (side <= 0) throw DimensionError("image side must be positive");
    values_ = Array::Zero(side * side);
  }

  Image(Index side, Array values) : side_(side), values_(std::move(values)) {
    if (side <= 0) throw DimensionError("image side must be positive");
    if (values_.size() != side * side)
      throw DimensionError("image data length " + std::to_string(values_.size()) +
                           " is not side^2 = " + std::to_string(side * side));
  }

  static Image Zero(Index side) { return Image(side); }
  static Image Constant(Index side, const T& value) {
    return Image(side, Array::Constant(side * side, value));
  }

  Index side() const { return side_; }
  Index size() const { return values_.size(); }
  bool empty() const { return side_ == 0; }

  T& operator()(Index row, Index col) { return values_[row * side_ + col]; }
  const T& operator()(Index row, Index col) const { return values_[row * side_ + col]; }
  T& operator[](Index i) { return values_[i]; }
  const T& operator[](Index i) const { return values_[i]; }

  Array& array() { return values_; }
  const Array& array() const { return values_; }

  bool allFinite() const { return values_.allFinite(); }

  friend bool operator==(const Image& a, const Image& b) {
    return a.side_ == b.side_ && (a.values_ == b.values_).all();
  }

 private:
  Index side_ = 0;
  Array values_;
};

template <typename Scalar>
using ComplexImage = Image<std::complex<Scalar>>;
template <typename Scalar>
using RealImage = Image<Scalar>;

using ComplexImaged = ComplexImage<double>;
using RealImaged = RealImage<double>;

template <typename A, typename B>
void require_same_side(const Image<A>& a, const Image<B>& b) {
  if (a.empty() || b.empty()) throw DimensionError("empty image operand");
  if (a.side() != b.side())
    throw DimensionError("side mismatch: " + std::to_string(a.side()) + " vs " +
                         std::to_string(b.side()));
}

/// Integer scan offset (row, col); the j-th shift moves pixel p to p + offset.
struct Offset {
  Index row = 0;
  Index col = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

class ScanGeometry {
 public:
  ScanGeometry() = default;

  ScanGeometry(Index side, std::vector<Offset> offsets) : side_(side), offsets_(std::move(offsets)) {
    if (side <= 0) throw DimensionError("scan geometry side must be positive");
    if (offsets_.empty()) throw ParameterError("scan geometry needs at least one offset");
    for (auto& o : offsets_) {
      o.row = ((o.row % side) + side) % side;
      o.col = ((o.col % side) + side) % side;
    }
  }

  Index side() const { return side_; }
  Index count() const { return static_cast<Index>(offsets_.size()); }
  const std::vector<Offset>& offsets() const { return offsets_; }

  const Offset& offset(Index j) const {
    if (j < 0 || j >= count())
      throw IndexError("frame index " + std::to_string(j) + " outside [0, " +
                       std::to_string(count()) + ")");
    return offsets_[static_cast<std::size_t>(j)];
  }

  friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;

 private:
  Index side_ = 0;
  std::vector<Offset> offsets_;
};

namespace detail {

template <typename Scalar>
Eigen::FFT<Scalar>& fft_engine() {
  // kissfft caches plans internally and is not reentrant, so one per thread.
  thread_local Eigen::FFT<Scalar> engine = [] {
    Eigen::FFT<Scalar> e;
    e.SetFlag(Eigen::FFT<Scalar>::Unscaled);
    return e;
  }();
  return engine;
}

template <typename Scalar>
ComplexImage<Scalar> unitary_dft2(const ComplexImage<Scalar>& img, bool forward) {
  using Complex = std::complex<Scalar>;
  if (img.empty()) throw DimensionError("fft of empty image");
  const Index n = img.side();
  if (n == 1) return img;  // kissfft crashes on length 1; the transform is the identity.
  auto& engine = fft_engine<Scalar>();

  std::vector<Complex> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  ComplexImage<Scalar> result(n);
  auto transform = [&] {
    if (forward)
      engine.fwd(out.data(), in.data(), n);
    else
      engine.inv(out.data(), in.data(), n);
  };

  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) in[c] = img(r, c);
    transform();
    for (Index c = 0; c < n; ++c) result(r, c) = out[c];
  }
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) in[r] = result(r, c);
    transform();
    for (Index r = 0; r < n; ++r) result(r, c) = out[r];
  }
  result.array() *= Scalar(1) / static_cast<Scalar>(n);
  return result;
}

}  // namespace detail

/// Orthonormal 2-D DFT: (F v)_k = (1/N) sum_p v_p exp(-2 pi i <k, p> / N).
template <typename Scalar>
ComplexImage<Scalar> fft2(const ComplexImage<Scalar>& img) {
  return detail::unitary_dft2(img, true);
}

template <typename Scalar>
ComplexImage<Scalar> ifft2(const ComplexImage<Scalar>& img) {
  return detail::unitary_dft2(img, false);
}

/// Cyclic translation by the j-th scan offset: out(p + offset_j) = in(p).
template <typename T>
Image<T> shift(const Image<T>& img, Index j, const ScanGeometry& geom) {
  const Offset& o = geom.offset(j);
  if (img.side() != geom.side()) throw DimensionError("image side differs from scan geometry");
  const Index n = img.side();
  Image<T> out(n);
  for (Index r = 0; r < n; ++r) {
    const T* src = &img(r, 0);
    T* dst = &out((r + o.row) % n, 0);
    std::copy(src, src + n - o.col, dst + o.col);
    std::copy(src + n - o.col, src + n, dst);
  }
  return out;
}

/// Adjoint (= inverse) of shift: out(p) = in(p + offset_j).
template <typename T>
Image<T> shift_adjoint(const Image<T>& img, Index j, const ScanGeometry& geom) {
  const Offset& o = geom.offset(j);
  if (img.side() != geom.side()) throw DimensionError("image side differs from scan geometry");
  const Index n = img.side();
  Image<T> out(n);
  for (Index r = 0; r < n; ++r) {
    const T* src = &img((r + o.row) % n, 0);
    T* dst = &out(r, 0);
    std::copy(src + o.col, src + n, dst);
    std::copy(src, src + o.col, dst + n - o.col);
  }
  return out;
}

template <typename A, typename B>
auto hadamard(const Image<A>& a, const Image<B>& b) {
  require_same_side(a, b);
  using R = decltype(std::declval<A>() * std::declval<B>());
  return Image<R>(a.side(), (a.array() * b.array()).eval());
}

/// Real inner product on C^n viewed as (R^2)^n: sum Re(a_i) Re(b_i) + Im(a_i) Im(b_i).
template <typename Scalar>
Scalar real_inner(const ComplexImage<Scalar>& a, const ComplexImage<Scalar>& b) {
  require_same_side(a, b);
  return (a.array().real() * b.array().real() + a.array().imag() * b.array().imag()).sum();
}

template <typename Scalar>
Scalar squared_norm(const ComplexImage<Scalar>& a) {
  return a.array().abs2().sum();
}

template <typename Scalar>
Scalar squared_distance(const ComplexImage<Scalar>& a, const ComplexImage<Scalar>& b) {
  require_same_side(a, b);
  return (a.array() - b.array()).abs2().sum();
}

template <typename Scalar>
RealImage<Scalar> abs2(const ComplexImage<Scalar>& a) {
  return RealImage<Scalar>(a.side(), a.array().abs2().eval());
}

template <typename Scalar>
RealImage<Scalar> abs(const ComplexImage<Scalar>& a) {
  return RealImage<Scalar>(a.side(), a.array().abs().eval());
}

template <typename Scalar>
ComplexImage<Scalar> conj(const ComplexImage<Scalar>& a) {
  return ComplexImage<Scalar>(a.side(), a.array().conjugate().eval());
}

}  // namespace ptycho
