#pragma once

// Dictionary-regularized reconstruction. The image is x = Pi vec(D * C) for
// a non-negative s x q x r coefficient tensor C, and C minimizes
//
//   0.5 || [ A / sqrt(m) ; (delta/c) L ] x - [ b ; 0 ] ||^2 + mu * phi(C),
//
// phi(C) = (||C||_sum [+ ||C_stacked||_*]) / q, subject to C >= 0. The
// solver is accelerated proximal gradient with backtracking and a momentum
// restart whenever the composite objective would increase.

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/fourier.hpp"
#include "tpc/image.hpp"
#include "tpc/patch.hpp"
#include "tpc/prox.hpp"
#include "tpc/sparse.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

enum class Prior { kSparse = 1, kSparseLowRank = 2 };

inline std::string prior_name(Prior p) {
  return p == Prior::kSparse ? "sparse" : "sparse+lowrank";
}

/// How the boundary term is weighted. kStacked uses c = sqrt(2 * boundary
/// count) inside the stacked least-squares form; kPenalty uses
/// c = sqrt(boundary count), i.e. exactly delta^2 * psi(x).
enum class BoundaryScaling { kStacked, kPenalty };

struct ReconConfig {
  double mu = 0.0;
  double delta = 0.0;
  Prior prior = Prior::kSparse;
  int max_iter = 3000;
  double rel_change_tol = 1e-7;
  double dykstra_tol = 1e-3;
  int dykstra_max_iter = 50;
  double initial_step = 0.0;  // <= 0: 1 / (power-method estimate of ||K||^2)
  double shrink = 0.5;
  int power_iterations = 10;
  BoundaryScaling boundary_scaling = BoundaryScaling::kStacked;

  void validate() const {
    if (!(mu >= 0)) throw InvalidArgument("mu must be >= 0");
    if (!(delta >= 0)) throw InvalidArgument("delta must be >= 0");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
    if (!(rel_change_tol > 0) || !(dykstra_tol > 0) || dykstra_max_iter < 1)
      throw InvalidArgument("solver tolerances must be positive");
    if (!(shrink > 0 && shrink < 1)) throw InvalidArgument("shrink factor must lie in (0, 1)");
    if (power_iterations < 1) throw InvalidArgument("power_iterations must be >= 1");
  }
};

/// Fixed data of one reconstruction: the tomography operator, data,
/// dictionary and patch layout.
class ReconProblem {
 public:
  ReconProblem(SparseSystemMatrix a, Vector b, Tensor3 dictionary, PatchGeometry geom)
      : a_(std::move(a)),
        b_(std::move(b)),
        d_(std::move(dictionary)),
        geom_(geom),
        perm_(geom),
        l_(boundary_diff_operator(geom)) {
    if (a_.cols() != geom_.pixels())
      throw InvalidArgument("ReconProblem: matrix has " + std::to_string(a_.cols()) +
                            " columns for a " + std::to_string(geom_.pixels()) + "-pixel image");
    if (b_.size() != a_.rows())
      throw InvalidArgument("ReconProblem: data length " + std::to_string(b_.size()) +
                            " != matrix rows " + std::to_string(a_.rows()));
    if (d_.rows() != geom_.p || d_.tubes() != geom_.r)
      throw InvalidArgument("ReconProblem: dictionary " + d_.shape_string() +
                            " does not match patch size " + std::to_string(geom_.p) + "x" +
                            std::to_string(geom_.r));
    at_ = a_.transpose();
    lt_ = l_.transpose();
    d_hat_ = dft(d_);
    dt_hat_ = fourier_transpose(d_hat_);
  }

  const SparseSystemMatrix& A() const { return a_; }
  const SparseSystemMatrix& At() const { return at_; }
  const SparseSystemMatrix& L() const { return l_; }
  const SparseSystemMatrix& Lt() const { return lt_; }
  const Vector& b() const { return b_; }
  const Tensor3& dictionary() const { return d_; }
  const FourierTensor3& dictionary_hat() const { return d_hat_; }
  const FourierTensor3& dictionary_t_hat() const { return dt_hat_; }
  const PatchGeometry& geometry() const { return geom_; }
  const PermutationMap& permutation() const { return perm_; }

  Index m() const { return a_.rows(); }
  Index s() const { return d_.cols(); }
  Index q() const { return geom_.q(); }

  /// sqrt(2 (M(M/p-1) + N(N/r-1))).
  double c_const() const { return std::sqrt(2.0 * static_cast<double>(geom_.boundary_count())); }

  /// Weight delta/c of the boundary block under the chosen scaling.
  double boundary_weight(const ReconConfig& cfg) const {
    const double den = static_cast<double>(geom_.boundary_count());
    if (den == 0.0) return 0.0;
    const double c = cfg.boundary_scaling == BoundaryScaling::kStacked ? c_const() : std::sqrt(den);
    return cfg.delta / c;
  }

  Tensor3 zero_coefficients() const { return Tensor3(s(), q(), geom_.r); }

 private:
  SparseSystemMatrix a_, at_;
  Vector b_;
  Tensor3 d_;
  PatchGeometry geom_;
  PermutationMap perm_;
  SparseSystemMatrix l_, lt_;
  FourierTensor3 d_hat_, dt_hat_;
};

/// sq x r matrix whose row block j (s rows) is squeeze(C(:, j, :)).
inline Matrix tensor_to_stacked(const Tensor3& c) {
  const Index s = c.rows(), q = c.cols(), r = c.tubes();
  Matrix out(s * q, r);
  for (Index k = 0; k < r; ++k)
    for (Index j = 0; j < q; ++j)
      for (Index i = 0; i < s; ++i) out(j * s + i, k) = c(i, j, k);
  return out;
}

inline Tensor3 stacked_to_tensor(const Matrix& m, Index s, Index q) {
  if (s < 1 || q < 1 || m.rows() != s * q)
    throw InvalidArgument("stacked_to_tensor: " + std::to_string(m.rows()) + " rows != s*q = " +
                          std::to_string(s) + "*" + std::to_string(q));
  Tensor3 out(s, q, m.cols());
  for (Index k = 0; k < m.cols(); ++k)
    for (Index j = 0; j < q; ++j)
      for (Index i = 0; i < s; ++i) out(i, j, k) = m(j * s + i, k);
  return out;
}

struct ForwardResult {
  Vector residual_data;    // (A z - b) / sqrt(m)
  Vector residual_smooth;  // (delta / c) L z
  double objective = 0.0;  // 0.5 (|r1|^2 + |r2|^2)
};

namespace detail {

inline void require_coefficients(const ReconProblem& pb, const Tensor3& c) {
  if (c.rows() != pb.s() || c.cols() != pb.q() || c.tubes() != pb.geometry().r)
    throw InvalidArgument("coefficient tensor " + c.shape_string() + " does not match " +
                          Tensor3::dims_string(pb.s(), pb.q(), pb.geometry().r));
}

/// z = Pi vec(D * C).
inline Vector image_of(const ReconProblem& pb, const Tensor3& c) {
  const Tensor3 x = idft(fourier_product(pb.dictionary_hat(), dft(c)));
  return apply_perm(pb.permutation(), x.vec());
}

}  // namespace detail

/// Linear part of the stacked operator: C -> (A z / sqrt(m), (delta/c) L z).
inline std::pair<Vector, Vector> apply_linear(const ReconProblem& pb, const Tensor3& c,
                                              const ReconConfig& cfg) {
  detail::require_coefficients(pb, c);
  const Vector z = detail::image_of(pb, c);
  const double wd = 1.0 / std::sqrt(static_cast<double>(pb.m()));
  return {wd * (pb.A() * z), pb.boundary_weight(cfg) * (pb.L() * z)};
}

/// Adjoint of apply_linear.
inline Tensor3 apply_adjoint(const ReconProblem& pb, const Vector& r_data, const Vector& r_smooth,
                             const ReconConfig& cfg) {
  if (r_data.size() != pb.m() || r_smooth.size() != pb.L().rows())
    throw InvalidArgument("apply_adjoint: residual lengths do not match the problem");
  const double wd = 1.0 / std::sqrt(static_cast<double>(pb.m()));
  const Vector g_img = wd * (pb.At() * r_data) + pb.boundary_weight(cfg) * (pb.Lt() * r_smooth);
  const Vector w = apply_perm_adjoint(pb.permutation(), g_img);
  const auto& g = pb.geometry();
  Tensor3 gt(g.p, g.q(), g.r, std::vector<double>(w.data(), w.data() + w.size()));
  return idft(fourier_product(pb.dictionary_t_hat(), dft(gt)));
}

inline ForwardResult forward_map(const ReconProblem& pb, const Tensor3& c, const ReconConfig& cfg) {
  auto [r1, r2] = apply_linear(pb, c, cfg);
  r1 -= pb.b() / std::sqrt(static_cast<double>(pb.m()));
  ForwardResult out;
  out.objective = 0.5 * (r1.squaredNorm() + r2.squaredNorm());
  out.residual_data = std::move(r1);
  out.residual_smooth = std::move(r2);
  return out;
}

/// Gradient of the smooth part with respect to C.
inline Tensor3 gradient(const ReconProblem& pb, const Tensor3& c, const ReconConfig& cfg) {
  const auto fw = forward_map(pb, c, cfg);
  return apply_adjoint(pb, fw.residual_data, fw.residual_smooth, cfg);
}

/// tau * (||C||_sum [+ ||C_stacked||_*]) with tau = mu / q.
inline double nonsmooth_value(const Tensor3& c, const ReconConfig& cfg, Index q) {
  const double tau = cfg.mu / static_cast<double>(q);
  if (tau == 0.0) return 0.0;
  double v = norms(c).sum;
  if (cfg.prior == Prior::kSparseLowRank) v += nuclear_norm(tensor_to_stacked(c));
  return tau * v;
}

struct ProxStepResult {
  Tensor3 c;
  int dykstra_iterations = 0;
  bool dykstra_converged = true;
};

/// prox of step * tau * phi plus the non-negativity constraint.
inline ProxStepResult prox_step(const Tensor3& c, double tau, Prior prior, double step,
                                double dykstra_tol = 1e-3, int dykstra_max_iter = 50) {
  if (!(step > 0)) throw InvalidArgument("prox_step: step must be > 0");
  ProxStepResult out;
  if (prior == Prior::kSparse) {
    out.c = prox_nonneg_l1(c, step * tau);
    return out;
  }
  const auto dy = dykstra_prox(tensor_to_stacked(c), step * tau, dykstra_tol, dykstra_max_iter);
  out.c = clamp_nonneg(stacked_to_tensor(dy.x, c.rows(), c.cols()));
  out.dykstra_iterations = dy.iterations;
  out.dykstra_converged = dy.converged;
  return out;
}

struct ReconDiagnostics {
  bool converged = false;
  int iterations = 0;
  int restarts = 0;
  int backtracks = 0;
  std::string prior;
  std::vector<double> objective;        // composite objective per accepted step
  std::vector<double> smooth_objective;  // smooth part per accepted step
  std::vector<double> step_size;
  std::vector<double> relative_change;
  std::vector<bool> restarted;  // momentum was reset before this step
  double wall_time_seconds = 0.0;
};

struct ReconResult {
  GrayImage x;
  Tensor3 c;
  ReconDiagnostics diagnostics;
};

/// Power-method estimate of ||K||^2 for the linear chain C -> (r1, r2).
inline double estimate_operator_norm_sq(const ReconProblem& pb, const ReconConfig& cfg) {
  Tensor3 v = pb.zero_coefficients();
  for (double& e : v.flat()) e = 1.0;
  v *= 1.0 / fro_norm(v);
  double est = 0.0;
  for (int k = 0; k < cfg.power_iterations; ++k) {
    const auto [r1, r2] = apply_linear(pb, v, cfg);
    Tensor3 w = apply_adjoint(pb, r1, r2, cfg);
    est = fro_norm(w);
    if (est == 0.0) break;
    v = w * (1.0 / est);
  }
  return est;
}

inline ReconResult reconstruct(const ReconProblem& pb, const ReconConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const double tau = cfg.mu / static_cast<double>(pb.q());
  auto smooth = [&](const Tensor3& c) { return forward_map(pb, c, cfg).objective; };
  auto composite = [&](const Tensor3& c, double f) {
    return f + nonsmooth_value(c, cfg, pb.q());
  };

  double step = cfg.initial_step;
  if (!(step > 0)) {
    const double lip = estimate_operator_norm_sq(pb, cfg);
    step = lip > 0 ? 1.0 / lip : 1.0;
  }

  ReconResult res;
  auto& diag = res.diagnostics;
  diag.prior = prior_name(cfg.prior);
  Tensor3 c = pb.zero_coefficients();
  Tensor3 y = c;
  double f_c = smooth(c);
  double obj = composite(c, f_c);
  double theta = 1.0;
  bool at_anchor = true;  // y == c, so the next step cannot be a momentum artifact

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const auto fw = forward_map(pb, y, cfg);
    const Tensor3 grad = apply_adjoint(pb, fw.residual_data, fw.residual_smooth, cfg);
    ProxStepResult next;
    double f_next = 0.0;
    while (true) {
      next = prox_step(y - step * grad, tau, cfg.prior, step, cfg.dykstra_tol, cfg.dykstra_max_iter);
      f_next = smooth(next.c);
      const Tensor3 d = next.c - y;
      const double model = fw.objective + grad.vec().dot(d.vec()) + d.vec().squaredNorm() / (2.0 * step);
      if (f_next <= model + 1e-12 * std::abs(fw.objective)) break;
      step *= cfg.shrink;
      ++diag.backtracks;
      if (step < 1e-300) throw NumericalError("reconstruct: backtracking step underflow");
    }
    const double obj_next = composite(next.c, f_next);
    diag.iterations = k;
    if (obj_next > obj && !at_anchor) {
      y = c;
      theta = 1.0;
      at_anchor = true;
      ++diag.restarts;
      continue;
    }
    const double change = fro_norm(next.c - c) / std::max(1.0, fro_norm(c));
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = next.c + ((theta - 1.0) / theta_next) * (next.c - c);
    theta = theta_next;
    diag.restarted.push_back(at_anchor && k > 1);
    at_anchor = false;
    c = std::move(next.c);
    f_c = f_next;
    obj = obj_next;
    diag.objective.push_back(obj);
    diag.smooth_objective.push_back(f_c);
    diag.step_size.push_back(step);
    diag.relative_change.push_back(change);
    if (change < cfg.rel_change_tol) {
      diag.converged = true;
      break;
    }
  }

  res.c = std::move(c);
  res.x = assemble_image(idft(fourier_product(pb.dictionary_hat(), dft(res.c))), pb.geometry());
  diag.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace tpc
