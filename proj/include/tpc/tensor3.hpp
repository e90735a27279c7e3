#pragma once

// Dense third-order tensors and the structural operations of the t-product
// algebra (squeeze/twist, unfold/fold, block circulant, transpose, norms).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tpc/errors.hpp"

namespace tpc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real l x m x n tensor. Storage is frontal-slice-major and column-major
/// within a slice, so element (i,j,k) lives at (k*m + j)*l + i and the flat
/// buffer is exactly vec(A).
class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(Index l, Index m, Index n, double fill = 0.0) : l_(l), m_(m), n_(n) {
    if (l < 0 || m < 0 || n < 0) throw InvalidArgument("Tensor3: negative dimension");
    data_.assign(static_cast<std::size_t>(l * m * n), fill);
  }

  Tensor3(Index l, Index m, Index n, std::vector<double> data)
      : l_(l), m_(m), n_(n), data_(std::move(data)) {
    if (l < 0 || m < 0 || n < 0) throw InvalidArgument("Tensor3: negative dimension");
    if (static_cast<Index>(data_.size()) != l * m * n)
      throw InvalidArgument("Tensor3: data length " + std::to_string(data_.size()) +
                            " does not match " + dims_string(l, m, n));
  }

  Index rows() const noexcept { return l_; }
  Index cols() const noexcept { return m_; }
  Index tubes() const noexcept { return n_; }
  Index size() const noexcept { return l_ * m_ * n_; }
  Index slice_size() const noexcept { return l_ * m_; }

  bool same_shape(const Tensor3& o) const noexcept {
    return l_ == o.l_ && m_ == o.m_ && n_ == o.n_;
  }
  std::string shape_string() const { return dims_string(l_, m_, n_); }

  double& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  double operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Flat buffer viewed as vec(A).
  Eigen::Map<Vector> vec() { return {data_.data(), size()}; }
  Eigen::Map<const Vector> vec() const { return {data_.data(), size()}; }

  /// Frontal slice A(:,:,k) as an l x m matrix view.
  Eigen::Map<Matrix> frontal(Index k) { return {data_.data() + k * l_ * m_, l_, m_}; }
  Eigen::Map<const Matrix> frontal(Index k) const {
    return {data_.data() + k * l_ * m_, l_, m_};
  }

  /// Lateral slice A(:,j,:) as an l x 1 x n tensor.
  Tensor3 lateral(Index j) const {
    Tensor3 out(l_, 1, n_);
    for (Index k = 0; k < n_; ++k)
      for (Index i = 0; i < l_; ++i) out(i, 0, k) = (*this)(i, j, k);
    return out;
  }

  void set_lateral(Index j, const Tensor3& slice) {
    if (slice.l_ != l_ || slice.m_ != 1 || slice.n_ != n_)
      throw InvalidArgument("set_lateral: expected " + dims_string(l_, 1, n_) + ", got " +
                            slice.shape_string());
    for (Index k = 0; k < n_; ++k)
      for (Index i = 0; i < l_; ++i) (*this)(i, j, k) = slice(i, 0, k);
  }

  /// Tube fiber A(i,j,:) as a length-n vector.
  Vector tube(Index i, Index j) const {
    Vector t(n_);
    for (Index k = 0; k < n_; ++k) t(k) = (*this)(i, j, k);
    return t;
  }

  Tensor3& operator+=(const Tensor3& o) {
    require_same(o, "operator+=");
    vec() += o.vec();
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    require_same(o, "operator-=");
    vec() -= o.vec();
    return *this;
  }
  Tensor3& operator*=(double a) {
    vec() *= a;
    return *this;
  }

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

  static std::string dims_string(Index l, Index m, Index n) {
    return std::to_string(l) + "x" + std::to_string(m) + "x" + std::to_string(n);
  }

 private:
  std::size_t offset(Index i, Index j, Index k) const noexcept {
    return static_cast<std::size_t>((k * m_ + j) * l_ + i);
  }
  void require_same(const Tensor3& o, const char* op) const {
    if (!same_shape(o))
      throw InvalidArgument(std::string(op) + ": shape " + shape_string() + " vs " +
                            o.shape_string());
  }

  Index l_ = 0, m_ = 0, n_ = 0;
  std::vector<double> data_;
};

/// A 1 x 1 x n tube fiber; behaves like a scalar under the t-product.
using TubeFiber = Tensor3;

inline TubeFiber make_tube(const Vector& values) {
  Tensor3 t(1, 1, values.size());
  for (Index k = 0; k < values.size(); ++k) t(0, 0, k) = values(k);
  return t;
}

/// l x 1 x n lateral slice -> l x n matrix.
inline Matrix squeeze(const Tensor3& lateral) {
  if (lateral.cols() != 1)
    throw InvalidArgument("squeeze: middle dimension must be 1, got " + lateral.shape_string());
  Matrix out(lateral.rows(), lateral.tubes());
  for (Index k = 0; k < lateral.tubes(); ++k)
    for (Index i = 0; i < lateral.rows(); ++i) out(i, k) = lateral(i, 0, k);
  return out;
}

/// Inverse of squeeze: l x n matrix -> l x 1 x n lateral slice.
inline Tensor3 twist(const Matrix& m) {
  Tensor3 out(m.rows(), 1, m.cols());
  for (Index k = 0; k < m.cols(); ++k)
    for (Index i = 0; i < m.rows(); ++i) out(i, 0, k) = m(i, k);
  return out;
}

/// Stack the frontal slices vertically: (l*n) x m.
inline Matrix unfold(const Tensor3& a) {
  Matrix out(a.rows() * a.tubes(), a.cols());
  for (Index k = 0; k < a.tubes(); ++k) out.middleRows(k * a.rows(), a.rows()) = a.frontal(k);
  return out;
}

inline Tensor3 fold(const Matrix& m, Index n) {
  if (n <= 0 || m.rows() % n != 0)
    throw InvalidArgument("fold: " + std::to_string(m.rows()) + " rows not divisible by n=" +
                          std::to_string(n));
  const Index l = m.rows() / n;
  Tensor3 out(l, m.cols(), n);
  for (Index k = 0; k < n; ++k) out.frontal(k) = m.middleRows(k * l, l);
  return out;
}

/// Block circulant matrix (l*n) x (m*n); block (a,b) is A^{((a-b) mod n)}.
/// Only used for reference computations: O(l m n^2) memory.
inline Matrix circ(const Tensor3& a) {
  const Index l = a.rows(), m = a.cols(), n = a.tubes();
  Matrix out(l * n, m * n);
  for (Index bc = 0; bc < n; ++bc)
    for (Index br = 0; br < n; ++br)
      out.block(br * l, bc * m, l, m) = a.frontal(((br - bc) % n + n) % n);
  return out;
}

/// m x m x n tensor whose first frontal slice is I_m and the rest zero.
inline Tensor3 identity_tensor(Index m, Index n) {
  if (m < 1 || n < 1) throw InvalidArgument("identity_tensor: m and n must be >= 1");
  Tensor3 out(m, m, n);
  out.frontal(0).setIdentity();
  return out;
}

/// Transpose every frontal slice, then reverse the order of slices 2..n.
inline Tensor3 ttranspose(const Tensor3& a) {
  const Index n = a.tubes();
  Tensor3 out(a.cols(), a.rows(), n);
  for (Index k = 0; k < n; ++k) out.frontal(k) = a.frontal((n - k) % n).transpose();
  return out;
}

struct TensorNorms {
  double fro = 0.0;
  double sum = 0.0;
  double max = 0.0;
};

inline TensorNorms norms(const Tensor3& a) {
  if (a.size() == 0) return {};
  const auto v = a.vec();
  return {v.norm(), v.lpNorm<1>(), v.lpNorm<Eigen::Infinity>()};
}

inline double fro_norm(const Tensor3& a) { return a.vec().norm(); }
inline double max_norm(const Tensor3& a) {
  return a.size() == 0 ? 0.0 : a.vec().lpNorm<Eigen::Infinity>();
}

/// Elementwise max(a, 0).
inline Tensor3 clamp_nonneg(Tensor3 a) {
  for (double& v : a.flat()) v = std::max(v, 0.0);
  return a;
}

}  // namespace tpc
