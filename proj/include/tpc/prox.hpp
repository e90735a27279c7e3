#pragma once

// Proximal operators: soft thresholding, one-sided (non-negative) shrinkage,
// singular value shrinkage, and the Dykstra-like scheme for the prox of
// their sum.

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "tpc/errors.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

/// sign(a) * max(|a| - tau, 0), elementwise.
inline Tensor3 soft_threshold(Tensor3 t, double tau) {
  if (tau < 0) throw InvalidArgument("soft_threshold: tau must be >= 0");
  for (double& v : t.flat()) v = std::copysign(std::max(std::abs(v) - tau, 0.0), v);
  return t;
}

/// max(x - tau, 0), elementwise: the prox of tau*||.||_1 plus the
/// indicator of the non-negative orthant.
inline Matrix prox_nonneg_l1(const Matrix& x, double tau) {
  if (tau < 0) throw InvalidArgument("prox_nonneg_l1: tau must be >= 0");
  return (x.array() - tau).cwiseMax(0.0).matrix();
}

inline Tensor3 prox_nonneg_l1(Tensor3 x, double tau) {
  if (tau < 0) throw InvalidArgument("prox_nonneg_l1: tau must be >= 0");
  for (double& v : x.flat()) v = std::max(v - tau, 0.0);
  return x;
}

/// U diag(max(sigma_i - tau, 0)) V^T.
inline Matrix prox_nuclear(const Matrix& x, double tau) {
  if (tau < 0) throw InvalidArgument("prox_nuclear: tau must be >= 0");
  if (x.size() == 0) return x;
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite())
    throw NumericalError("prox_nuclear: SVD failed");
  const Vector shrunk = (svd.singularValues().array() - tau).cwiseMax(0.0).matrix();
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

inline double nuclear_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues().sum();
}

struct DykstraResult {
  Matrix x;
  int iterations = 0;
  bool converged = false;
};

/// Prox of tau_f*||X||_sum + tau_g*||X||_* restricted to X >= 0, by
/// alternating the nuclear (g) and one-sided l1 (f) proxes with correction
/// terms:
///   Y_k     = prox_g(X_k + P_k),   P_{k+1} = X_k + P_k - Y_k,
///   X_{k+1} = prox_f(Y_k + Q_k),   Q_{k+1} = Y_k + Q_k - X_{k+1},
/// stopping once ||Y_k - X_{k+1}||_F < tol.
inline DykstraResult dykstra_prox(const Matrix& z, double tau_f, double tau_g, double tol,
                                  int max_iter) {
  if (tau_f < 0 || tau_g < 0) throw InvalidArgument("dykstra_prox: thresholds must be >= 0");
  if (tol <= 0 || max_iter < 1) throw InvalidArgument("dykstra_prox: bad tolerance settings");
  DykstraResult res;
  Matrix x = z;
  Matrix p = Matrix::Zero(z.rows(), z.cols());
  Matrix q = Matrix::Zero(z.rows(), z.cols());
  for (int k = 1; k <= max_iter; ++k) {
    const Matrix y = tau_g > 0 ? prox_nuclear(x + p, tau_g) : Matrix(x + p);
    p = x + p - y;
    Matrix x_next = prox_nonneg_l1(y + q, tau_f);
    q = y + q - x_next;
    const double gap = (y - x_next).norm();
    x = std::move(x_next);
    res.iterations = k;
    if (gap < tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

/// Same threshold on both terms.
inline DykstraResult dykstra_prox(const Matrix& z, double tau, double tol = 1e-3, int max_iter = 100) {
  return dykstra_prox(z, tau, tau, tol, max_iter);
}

}  // namespace tpc
