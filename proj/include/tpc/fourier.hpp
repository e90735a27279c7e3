#pragma once

// t-product machinery in the Fourier domain. A DFT along the tube fibers
// block-diagonalizes circ(A), so products and solves decouple into n
// independent complex matrix problems, one per frequency.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// Number of frequency slices needed for a real length-n transform.
constexpr Index half_spectrum(Index n) { return n / 2 + 1; }

/// DFT of a real tensor along its third dimension. All n slices are stored;
/// for real input slice n-k is the conjugate of slice k.
struct FourierTensor3 {
  Index l = 0, m = 0, n = 0;
  std::vector<CMatrix> slices;

  FourierTensor3() = default;
  FourierTensor3(Index l_, Index m_, Index n_)
      : l(l_), m(m_), n(n_), slices(static_cast<std::size_t>(n_), CMatrix::Zero(l_, m_)) {}

  CMatrix& operator[](Index k) { return slices[static_cast<std::size_t>(k)]; }
  const CMatrix& operator[](Index k) const { return slices[static_cast<std::size_t>(k)]; }

  /// Overwrite slices h..n-1 with conjugates of 1..n-h.
  void fill_conjugate_half() {
    for (Index k = half_spectrum(n); k < n; ++k) (*this)[k] = (*this)[n - k].conjugate();
  }
};

namespace detail {

/// W(k, f) = exp(sign * 2 pi i k f / n). The roots are tabulated once with
/// exact conjugate symmetry and exact values at multiples of n/4, so the
/// DC and Nyquist bins of a real signal come out exactly real.
inline CMatrix dft_matrix(Index n, Index cols, double sign) {
  std::vector<Complex> root(static_cast<std::size_t>(n));
  for (Index j = 0; 2 * j <= n; ++j) {
    Complex w;
    if (4 * j == n)
      w = Complex(0.0, sign);
    else if (2 * j == n)
      w = Complex(-1.0, 0.0);
    else if (j == 0)
      w = Complex(1.0, 0.0);
    else {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      w = Complex(std::cos(angle), std::sin(angle));
    }
    root[static_cast<std::size_t>(j)] = w;
    root[static_cast<std::size_t>((n - j) % n)] = std::conj(w);
  }
  CMatrix w(n, cols);
  for (Index k = 0; k < n; ++k)
    for (Index f = 0; f < cols; ++f) w(k, f) = root[static_cast<std::size_t>((k * f) % n)];
  return w;
}

inline void require_real_symmetric_dims(const FourierTensor3& a, const char* op) {
  if (static_cast<Index>(a.slices.size()) != a.n)
    throw InvalidArgument(std::string(op) + ": slice count does not match n");
}

}  // namespace detail

/// Forward DFT along tube fibers. The flat buffer of a Tensor3 is an
/// (l*m) x n column-major matrix, so the transform is two real matrix
/// products (cosine and sine parts) over the half spectrum.
inline FourierTensor3 dft(const Tensor3& a) {
  const Index lm = a.slice_size(), n = a.tubes(), h = half_spectrum(n);
  FourierTensor3 out(a.rows(), a.cols(), n);
  if (a.size() == 0) return out;
  Eigen::Map<const Matrix> flat(a.flat().data(), lm, n);
  const CMatrix w = detail::dft_matrix(n, h, -1.0);
  const Matrix re = flat * w.real();
  const Matrix im = flat * w.imag();
  for (Index f = 0; f < h; ++f) {
    CMatrix& slice = out[f];
    slice.real() = Eigen::Map<const Matrix>(re.col(f).data(), a.rows(), a.cols());
    slice.imag() = Eigen::Map<const Matrix>(im.col(f).data(), a.rows(), a.cols());
  }
  out.fill_conjugate_half();
  return out;
}

/// Inverse DFT. The spectrum must be conjugate symmetric up to 1e-8 of its
/// norm; otherwise NumericalError is raised. By Parseval the anti-symmetric
/// part measures exactly the imaginary residue of the inverse, and scaling
/// by the input keeps near-zero results from cancellation acceptable.
inline Tensor3 idft(const FourierTensor3& a) {
  detail::require_real_symmetric_dims(a, "idft");
  const Index lm = a.l * a.m, n = a.n;
  Tensor3 out(a.l, a.m, n);
  if (lm == 0 || n == 0) return out;
  Matrix re(lm, n), im(lm, n);
  double total = 0.0, asym = 0.0;
  for (Index f = 0; f < n; ++f) {
    re.col(f) = a[f].real().reshaped();
    im.col(f) = a[f].imag().reshaped();
    total += a[f].squaredNorm();
    asym += (a[f] - a[(n - f) % n].conjugate()).squaredNorm();
  }
  const double imag = 0.5 * std::sqrt(asym / static_cast<double>(n));
  const double scale = std::sqrt(total / static_cast<double>(n));
  if (imag > 1e-8 * scale)
    throw NumericalError("idft: imaginary residue " + std::to_string(imag) +
                         " exceeds 1e-8 of spectrum scale " + std::to_string(scale));
  const CMatrix w = detail::dft_matrix(n, n, 1.0);
  Eigen::Map<Matrix> x(out.flat().data(), lm, n);
  x.noalias() = re * w.real().transpose();
  x.noalias() -= im * w.imag().transpose();
  x /= static_cast<double>(n);
  return out;
}

/// Slice-wise product in the Fourier domain.
inline FourierTensor3 fourier_product(const FourierTensor3& a, const FourierTensor3& b) {
  if (a.m != b.l || a.n != b.n)
    throw InvalidArgument("tprod: cannot multiply " + Tensor3::dims_string(a.l, a.m, a.n) +
                          " by " + Tensor3::dims_string(b.l, b.m, b.n));
  FourierTensor3 out(a.l, b.m, a.n);
  for (Index f = 0; f < half_spectrum(a.n); ++f) out[f].noalias() = a[f] * b[f];
  out.fill_conjugate_half();
  return out;
}

/// Conjugate transpose of every slice; the Fourier image of ttranspose.
inline FourierTensor3 fourier_transpose(const FourierTensor3& a) {
  FourierTensor3 out(a.m, a.l, a.n);
  for (Index f = 0; f < a.n; ++f) out[f] = a[f].adjoint();
  return out;
}

/// Adds rho to the diagonal of every slice (A + rho*I in the t-algebra).
inline void fourier_add_identity(FourierTensor3& a, double rho) {
  for (auto& s : a.slices) s.diagonal().array() += rho;
}

/// Solves A * X = B per frequency with a Cholesky factorization. Each slice
/// of A must be Hermitian positive definite.
inline FourierTensor3 fourier_solve_spd(const FourierTensor3& a, const FourierTensor3& b) {
  if (a.l != a.m || a.m != b.l || a.n != b.n)
    throw InvalidArgument("tsolve_spd: incompatible shapes " +
                          Tensor3::dims_string(a.l, a.m, a.n) + " and " +
                          Tensor3::dims_string(b.l, b.m, b.n));
  FourierTensor3 out(b.l, b.m, b.n);
  for (Index f = 0; f < half_spectrum(a.n); ++f) {
    Eigen::LLT<CMatrix> llt(a[f]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("tsolve_spd: slice " + std::to_string(f) +
                               " is not positive definite",
                           static_cast<long>(f));
    out[f] = llt.solve(b[f]);
  }
  out.fill_conjugate_half();
  return out;
}

/// t-product B * C computed as per-frequency matrix products.
inline Tensor3 tprod(const Tensor3& b, const Tensor3& c) {
  if (b.cols() != c.rows() || b.tubes() != c.tubes())
    throw InvalidArgument("tprod: cannot multiply " + b.shape_string() + " by " +
                          c.shape_string());
  return idft(fourier_product(dft(b), dft(c)));
}

/// X with A * X = B, for A whose Fourier slices are Hermitian positive definite.
inline Tensor3 tsolve_spd(const Tensor3& a, const Tensor3& b) {
  return idft(fourier_solve_spd(dft(a), dft(b)));
}

}  // namespace tpc
