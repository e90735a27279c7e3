#pragma once

// Tensor dictionary learning: Y ~ D * H with D in the set
//   {D >= 0, ||D(:,i,:)||_F <= sqrt(p r) for all i}
// and H >= 0 sparse, solved by ADMM on the split D = U, H = V.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/fourier.hpp"
#include "tpc/prox.hpp"
#include "tpc/rng.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

struct DictLearnConfig {
  Index s = 32;
  double lambda = 0.1;
  double rho = 1.0;
  double eps = 1e-4;
  int max_iter = 1000;
  int dykstra_max_iter = 100;
  double dykstra_tol = 1e-10;
  std::uint64_t seed = 0;
  /// Test hook: replace the projection onto the dictionary set by identity.
  bool unconstrained_dictionary = false;

  void validate() const {
    if (s < 1) throw InvalidArgument("dictionary size s must be >= 1");
    if (!(lambda >= 0)) throw InvalidArgument("lambda must be >= 0");
    if (!(rho > 0)) throw InvalidArgument("rho must be > 0");
    if (!(eps > 0)) throw InvalidArgument("eps must be > 0");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
    if (dykstra_max_iter < 1 || !(dykstra_tol > 0))
      throw InvalidArgument("dykstra settings must be positive");
  }
};

struct DictLearnState {
  Tensor3 D, H, U, V, Lambda, LambdaBar;
  int iter = 0;
};

/// The four normalized stopping residuals, in order:
/// ||D-U||, ||H-V||, ||LambdaBar - D^T*(D*H-Y)||, ||Lambda - (D*H-Y)*H^T||,
/// each a max-norm divided by max(1, max-norm of D, H, LambdaBar, Lambda).
struct KktResiduals {
  std::array<double, 4> values{};

  bool all_below(double eps) const {
    for (double v : values)
      if (!(v <= eps)) return false;
    return true;
  }
  double worst() const { return *std::max_element(values.begin(), values.end()); }
};

struct DictLearnResult {
  Tensor3 D, H;
  int iterations = 0;
  bool converged = false;
  std::vector<KktResiduals> kkt_history;
  std::vector<double> objective_history;
  DictLearnState final_state;
};

struct ProjectionResult {
  Tensor3 x;
  int iterations = 0;
  bool converged = false;
};

/// Metric projection onto the dictionary set via Dykstra's alternating
/// projections between the non-negative orthant and the product of
/// per-lateral-slice Frobenius balls of radius sqrt(p r).
inline ProjectionResult project_onto_D(const Tensor3& t, int max_iter = 100, double tol = 1e-10) {
  const Index p = t.rows(), s = t.cols(), r = t.tubes();
  const double radius = std::sqrt(static_cast<double>(p * r));
  auto project_balls = [&](Tensor3 a) {
    for (Index i = 0; i < s; ++i) {
      double sq = 0.0;
      for (Index k = 0; k < r; ++k)
        for (Index row = 0; row < p; ++row) sq += a(row, i, k) * a(row, i, k);
      const double nrm = std::sqrt(sq);
      if (nrm > radius) {
        const double scale = radius / nrm;
        for (Index k = 0; k < r; ++k)
          for (Index row = 0; row < p; ++row) a(row, i, k) *= scale;
      }
    }
    return a;
  };

  ProjectionResult res;
  Tensor3 x = t;
  Tensor3 p_corr(p, s, r), q_corr(p, s, r);
  for (int k = 1; k <= max_iter; ++k) {
    const Tensor3 y = clamp_nonneg(x + p_corr);
    p_corr = x + p_corr - y;
    Tensor3 x_next = project_balls(y + q_corr);
    q_corr = y + q_corr - x_next;
    const double change = fro_norm(x_next - x);
    x = std::move(x_next);
    res.iterations = k;
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

namespace detail {

/// Objective 0.5||Y - D*H||_F^2 + lambda ||H||_sum together with the KKT
/// residuals; both share the Fourier-domain residual D*H - Y.
struct KktEvaluation {
  KktResiduals kkt;
  double objective = 0.0;
  double residual_fro = 0.0;
};

inline KktEvaluation evaluate_kkt(const DictLearnState& st, const FourierTensor3& y_hat,
                                  double lambda) {
  const FourierTensor3 d_hat = dft(st.D);
  const FourierTensor3 h_hat = dft(st.H);
  FourierTensor3 res_hat = fourier_product(d_hat, h_hat);
  for (Index f = 0; f < res_hat.n; ++f) res_hat[f] -= y_hat[f];
  const Tensor3 residual = idft(res_hat);
  const Tensor3 dt_res = idft(fourier_product(fourier_transpose(d_hat), res_hat));
  const Tensor3 res_ht = idft(fourier_product(res_hat, fourier_transpose(h_hat)));

  KktEvaluation out;
  auto rel = [](const Tensor3& diff, const Tensor3& ref) {
    return max_norm(diff) / std::max(1.0, max_norm(ref));
  };
  out.kkt.values = {rel(st.D - st.U, st.D), rel(st.H - st.V, st.H),
                    rel(st.LambdaBar - dt_res, st.LambdaBar), rel(st.Lambda - res_ht, st.Lambda)};
  out.residual_fro = fro_norm(residual);
  out.objective = 0.5 * out.residual_fro * out.residual_fro + lambda * norms(st.H).sum;
  return out;
}

inline DictLearnState admm_step_fourier(DictLearnState st, const FourierTensor3& y_hat,
                                        const DictLearnConfig& cfg) {
  const double rho = cfg.rho;
  const Index p = st.U.rows(), s = st.U.cols(), r = st.U.tubes();
  const Index t = st.V.cols();
  if (y_hat.l != p || y_hat.m != t || y_hat.n != r || st.V.rows() != s || st.V.tubes() != r)
    throw InvalidArgument("admm_step: inconsistent shapes");

  // D <- P(U - Lambda/rho)
  {
    Tensor3 target = st.U - (1.0 / rho) * st.Lambda;
    st.D = cfg.unconstrained_dictionary
               ? std::move(target)
               : project_onto_D(target, cfg.dykstra_max_iter, cfg.dykstra_tol).x;
  }
  // V <- (U^T*U + rho I)^{-1} * (U^T*Y + LambdaBar + rho H)
  {
    const FourierTensor3 u_hat = dft(st.U);
    const FourierTensor3 ut_hat = fourier_transpose(u_hat);
    FourierTensor3 gram = fourier_product(ut_hat, u_hat);
    fourier_add_identity(gram, rho);
    FourierTensor3 rhs = fourier_product(ut_hat, y_hat);
    const FourierTensor3 extra = dft(st.LambdaBar + rho * st.H);
    for (Index f = 0; f < r; ++f) rhs[f] += extra[f];
    st.V = idft(fourier_solve_spd(gram, rhs));
  }
  // H <- max(S_{lambda/rho}(V - LambdaBar/rho), 0)
  st.H = clamp_nonneg(soft_threshold(st.V - (1.0 / rho) * st.LambdaBar, cfg.lambda / rho));
  // U (V*V^T + rho I) = Y V^T + Lambda + rho D, solved through the
  // conjugate-transposed system per frequency.
  {
    const FourierTensor3 v_hat = dft(st.V);
    const FourierTensor3 vt_hat = fourier_transpose(v_hat);
    FourierTensor3 gram = fourier_product(v_hat, vt_hat);
    fourier_add_identity(gram, rho);
    FourierTensor3 rhs = fourier_product(y_hat, vt_hat);
    const FourierTensor3 extra = dft(st.Lambda + rho * st.D);
    for (Index f = 0; f < r; ++f) rhs[f] += extra[f];
    st.U = idft(fourier_transpose(fourier_solve_spd(gram, fourier_transpose(rhs))));
  }
  // multiplier updates
  st.Lambda += rho * (st.D - st.U);
  st.LambdaBar += rho * (st.H - st.V);
  ++st.iter;
  return st;
}

}  // namespace detail

/// One ADMM sweep: D, V, H, U, Lambda, LambdaBar in that order.
inline DictLearnState admm_step(DictLearnState state, const Tensor3& y, const DictLearnConfig& cfg) {
  return detail::admm_step_fourier(std::move(state), dft(y), cfg);
}

inline KktResiduals kkt_residuals(const DictLearnState& state, const Tensor3& y) {
  return detail::evaluate_kkt(state, dft(y), 0.0).kkt;
}

/// U from s randomly chosen training patches (without replacement when
/// s <= t), V = H = rectangular identity (ones at (i,i,0)), multipliers zero.
inline DictLearnState initial_state(const Tensor3& y, const DictLearnConfig& cfg) {
  const Index p = y.rows(), t = y.cols(), r = y.tubes(), s = cfg.s;
  if (t < 1) throw InvalidArgument("learn_dictionary: no training patches");
  CounterRng rng(cfg.seed, Stream::kDictionaryInit);
  std::vector<std::size_t> pick;
  if (s <= t) {
    pick = rng.sample_without_replacement(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
  } else {
    for (Index i = 0; i < s; ++i) pick.push_back(static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(t))));
  }
  DictLearnState st;
  st.U = Tensor3(p, s, r);
  for (Index i = 0; i < s; ++i) st.U.set_lateral(i, y.lateral(static_cast<Index>(pick[static_cast<std::size_t>(i)])));
  st.V = Tensor3(s, t, r);
  for (Index i = 0; i < std::min(s, t); ++i) st.V(i, i, 0) = 1.0;
  st.H = st.V;
  st.D = project_onto_D(st.U, cfg.dykstra_max_iter, cfg.dykstra_tol).x;
  st.Lambda = Tensor3(p, s, r);
  st.LambdaBar = Tensor3(s, t, r);
  return st;
}

using AdmmObserver = std::function<void(const DictLearnState&, const KktResiduals&, double)>;

/// ADMM until all four residuals are <= eps or max_iter sweeps.
inline DictLearnResult learn_dictionary(const Tensor3& y, const DictLearnConfig& cfg,
                                        const AdmmObserver& observer = {}) {
  cfg.validate();
  const FourierTensor3 y_hat = dft(y);
  DictLearnState st = initial_state(y, cfg);
  DictLearnResult res;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    st = detail::admm_step_fourier(std::move(st), y_hat, cfg);
    const auto ev = detail::evaluate_kkt(st, y_hat, cfg.lambda);
    res.kkt_history.push_back(ev.kkt);
    res.objective_history.push_back(ev.objective);
    res.iterations = k;
    if (observer) observer(st, ev.kkt, ev.objective);
    if (ev.kkt.all_below(cfg.eps)) {
      res.converged = true;
      break;
    }
  }
  res.D = st.D;
  res.H = st.H;
  res.final_state = std::move(st);
  return res;
}

struct NnlsResult {
  Tensor3 c;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

/// Largest squared singular value over the Fourier slices: the Lipschitz
/// constant of C -> D^T * (D * C - X).
inline double tprod_lipschitz(const FourierTensor3& d_hat) {
  double l = 0.0;
  for (Index f = 0; f < half_spectrum(d_hat.n); ++f) {
    if (d_hat[f].size() == 0) continue;
    Eigen::JacobiSVD<CMatrix> svd(d_hat[f]);
    l = std::max(l, svd.singularValues()(0) * svd.singularValues()(0));
  }
  return l;
}

inline NnlsResult nnls_fourier(const FourierTensor3& d_hat, double lipschitz, const Tensor3& xj,
                               int max_iter, double tol) {
  const FourierTensor3 dt_hat = fourier_transpose(d_hat);
  const FourierTensor3 x_hat = dft(xj);
  auto objective_and_grad = [&](const Tensor3& c, Tensor3* grad) {
    FourierTensor3 res = fourier_product(d_hat, dft(c));
    for (Index f = 0; f < res.n; ++f) res[f] -= x_hat[f];
    if (grad) *grad = idft(fourier_product(dt_hat, res));
    const double fro = fro_norm(idft(res));
    return 0.5 * fro * fro;
  };

  NnlsResult out;
  out.c = Tensor3(d_hat.m, xj.cols(), xj.tubes());
  out.objective = objective_and_grad(out.c, nullptr);
  if (lipschitz <= 0.0 || out.objective == 0.0) return out;
  const double step = 1.0 / lipschitz;
  Tensor3 y = out.c, grad;
  double theta = 1.0;
  for (int k = 1; k <= max_iter; ++k) {
    objective_and_grad(y, &grad);
    Tensor3 c_next = clamp_nonneg(y - step * grad);
    const double f_next = objective_and_grad(c_next, nullptr);
    out.iterations = k;
    if (f_next > out.objective) {
      // restart momentum from the last accepted point
      y = out.c;
      theta = 1.0;
      continue;
    }
    const double decrease = out.objective - f_next;
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = c_next + ((theta - 1.0) / theta_next) * (c_next - out.c);
    theta = theta_next;
    out.c = std::move(c_next);
    const double previous = out.objective;
    out.objective = f_next;
    if (f_next <= std::numeric_limits<double>::min() || decrease <= tol * previous) break;
  }
  return out;
}

}  // namespace detail

/// min_{C >= 0} 0.5 ||D * C - X_j||_F^2 by projected accelerated gradient.
inline NnlsResult nnls_tpatch(const Tensor3& d, const Tensor3& xj, int max_iter = 5000,
                              double tol = 1e-12) {
  if (d.rows() != xj.rows() || d.tubes() != xj.tubes() || xj.cols() != 1)
    throw InvalidArgument("nnls_tpatch: dictionary " + d.shape_string() +
                          " incompatible with patch " + xj.shape_string());
  const FourierTensor3 d_hat = dft(d);
  return detail::nnls_fourier(d_hat, detail::tprod_lipschitz(d_hat), xj, max_iter, tol);
}

struct MaeResult {
  double mae = 0.0;
  std::vector<double> patch_errors;  // ||D * C_j - X_j||_F per patch
};

/// (1/(p q r)) sum_j ||D * C_j* - X_j||_F with C_j* the non-negative best
/// approximation of patch j.
inline MaeResult mean_approx_error(const Tensor3& d, const Tensor3& x_parts, int max_iter = 5000,
                                   double tol = 1e-12) {
  if (d.rows() != x_parts.rows() || d.tubes() != x_parts.tubes())
    throw InvalidArgument("mean_approx_error: dictionary " + d.shape_string() +
                          " incompatible with patches " + x_parts.shape_string());
  const FourierTensor3 d_hat = dft(d);
  const double lip = detail::tprod_lipschitz(d_hat);
  MaeResult out;
  double total = 0.0;
  for (Index j = 0; j < x_parts.cols(); ++j) {
    const auto nn = detail::nnls_fourier(d_hat, lip, x_parts.lateral(j), max_iter, tol);
    const double err = std::sqrt(2.0 * nn.objective);
    out.patch_errors.push_back(err);
    total += err;
  }
  const double denom = static_cast<double>(x_parts.rows() * x_parts.cols() * x_parts.tubes());
  out.mae = denom > 0 ? total / denom : 0.0;
  return out;
}

}  // namespace tpc
