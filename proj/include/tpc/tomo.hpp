#pragma once

// Parallel-beam tomography: exact ray/pixel intersection lengths, noisy
// sinogram simulation and a Tikhonov (CG on the normal equations) baseline.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/rng.hpp"
#include "tpc/sparse.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

/// Square n_side x n_side grid of unit pixels spanning [-n/2, n/2]^2.
/// Angles are uniform on [angle_start, angle_end) in degrees; each angle
/// has rays_per_angle parallel rays with offsets equispaced over the grid
/// diagonal [-n/sqrt(2), n/sqrt(2)].
struct ParallelGeometry {
  Index n_side = 0;
  Index num_angles = 0;
  Index rays_per_angle = 0;
  double angle_start = 0.0;
  double angle_end = 180.0;

  void validate() const {
    if (n_side < 1) throw InvalidArgument("ParallelGeometry: grid size must be >= 1");
    if (num_angles < 1 || rays_per_angle < 1)
      throw InvalidArgument("ParallelGeometry: need at least one angle and one ray");
    if (!(angle_end > angle_start)) throw InvalidArgument("ParallelGeometry: empty angle range");
  }

  Index rows() const { return num_angles * rays_per_angle; }
  Index cols() const { return n_side * n_side; }

  double angle_degrees(Index a) const {
    return angle_start + (angle_end - angle_start) * static_cast<double>(a) /
                             static_cast<double>(num_angles);
  }

  double ray_offset(Index k) const {
    const double half_width = std::numbers::sqrt2 * static_cast<double>(n_side) / 2.0;
    if (rays_per_angle == 1) return 0.0;
    return -half_width + 2.0 * half_width * static_cast<double>(k) /
                             static_cast<double>(rays_per_angle - 1);
  }
};

/// One ray as (pixel index, intersection length) pairs, sorted by pixel.
/// The ray is { offset * (-sin t, cos t) + s * (cos t, sin t) }; pixel
/// (row i, col j) covers x in [j - n/2, j + 1 - n/2], y in [n/2 - i - 1, n/2 - i]
/// and has index i + j*n.
inline std::vector<std::pair<int, double>> ray_intersections(Index n_side, double theta_rad,
                                                             double offset) {
  const double h = static_cast<double>(n_side) / 2.0;
  const double dx = std::cos(theta_rad), dy = std::sin(theta_rad);
  const double px = -offset * dy, py = offset * dx;
  constexpr double kParallel = 1e-14;

  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  auto clip = [&](double p0, double d) {
    if (std::abs(d) < kParallel) {
      if (p0 < -h || p0 > h) t_lo = t_hi = 0.0;  // misses the grid
      return;
    }
    double a = (-h - p0) / d, b = (h - p0) / d;
    if (a > b) std::swap(a, b);
    t_lo = std::max(t_lo, a);
    t_hi = std::min(t_hi, b);
  };
  clip(px, dx);
  clip(py, dy);
  std::vector<std::pair<int, double>> out;
  if (!(t_hi > t_lo)) return out;

  std::vector<double> ts{t_lo, t_hi};
  auto crossings = [&](double p0, double d) {
    if (std::abs(d) < kParallel) return;
    for (Index c = 0; c <= n_side; ++c) {
      const double t = (-h + static_cast<double>(c) - p0) / d;
      if (t > t_lo && t < t_hi) ts.push_back(t);
    }
  };
  crossings(px, dx);
  crossings(py, dy);
  std::sort(ts.begin(), ts.end());

  for (std::size_t e = 0; e + 1 < ts.size(); ++e) {
    const double len = ts[e + 1] - ts[e];
    if (len <= 1e-12) continue;
    const double tm = 0.5 * (ts[e] + ts[e + 1]);
    const auto col = std::clamp<Index>(static_cast<Index>(std::floor(px + tm * dx + h)), 0, n_side - 1);
    const auto row = std::clamp<Index>(static_cast<Index>(std::floor(h - (py + tm * dy))), 0, n_side - 1);
    out.emplace_back(static_cast<int>(row + col * n_side), len);
  }
  std::sort(out.begin(), out.end());
  std::vector<std::pair<int, double>> merged;
  for (const auto& [idx, len] : out) {
    if (!merged.empty() && merged.back().first == idx)
      merged.back().second += len;
    else
      merged.emplace_back(idx, len);
  }
  return merged;
}

/// System matrix with row a*rays_per_angle + k for angle a and ray k.
/// Rays that miss the grid leave empty rows.
inline SparseSystemMatrix build_parallel_matrix(const ParallelGeometry& g) {
  g.validate();
  std::vector<Eigen::Triplet<double, int>> trips;
  for (Index a = 0; a < g.num_angles; ++a) {
    const double theta = g.angle_degrees(a) * std::numbers::pi / 180.0;
    for (Index k = 0; k < g.rays_per_angle; ++k) {
      const int row = static_cast<int>(a * g.rays_per_angle + k);
      for (const auto& [col, len] : ray_intersections(g.n_side, theta, g.ray_offset(k)))
        trips.emplace_back(row, col, len);
    }
  }
  SparseSystemMatrix m(g.rows(), g.cols());
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

inline Vector forward_project(const SparseSystemMatrix& a, const Vector& x) {
  if (x.size() != a.cols())
    throw InvalidArgument("forward_project: image has " + std::to_string(x.size()) +
                          " pixels, matrix expects " + std::to_string(a.cols()));
  return a * x;
}

/// b + e with e = level * ||b|| * g / ||g||, g standard normal drawn from
/// the noise stream of `seed`. The realized relative noise is exactly level.
inline Vector add_relative_gaussian_noise(const Vector& b, double level, std::uint64_t seed) {
  if (!(level >= 0)) throw InvalidArgument("noise level must be >= 0");
  if (level == 0.0) return b;
  const double bn = b.norm();
  if (bn == 0.0) throw InvalidArgument("cannot scale relative noise for a zero sinogram");
  CounterRng rng(seed, Stream::kNoise);
  Vector g(b.size());
  for (Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
  return b + (level * bn / g.norm()) * g;
}

struct TikhonovResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients on (A^T A + lambda I) x = A^T b, from x = 0.
inline TikhonovResult tikhonov_solve(const SparseSystemMatrix& a, const Vector& b, double lambda,
                                     int max_iter = 500, double tol = 1e-10) {
  if (!(lambda > 0)) throw InvalidArgument("tikhonov_solve: lambda must be > 0");
  if (b.size() != a.rows()) throw InvalidArgument("tikhonov_solve: data length mismatch");
  const SparseSystemMatrix at = a.transpose();
  auto normal_op = [&](const Vector& v) -> Vector { return at * (a * v) + lambda * v; };
  TikhonovResult res;
  res.x = Vector::Zero(a.cols());
  const Vector rhs = at * b;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return res;
  Vector r = rhs, p = r;
  double rr = r.squaredNorm();
  for (int k = 1; k <= max_iter; ++k) {
    const Vector ap = normal_op(p);
    const double alpha = rr / p.dot(ap);
    res.x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    res.iterations = k;
    res.relative_residual = std::sqrt(rr_next) / rhs_norm;
    if (res.relative_residual <= tol) break;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return res;
}

struct Sinogram {
  Vector values;
  ParallelGeometry geom;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

/// CSV rows "angle_index,ray_index,value" in row order of the system matrix.
inline void save_sinogram_csv(const std::filesystem::path& path, const Sinogram& s) {
  if (s.values.size() != s.geom.rows()) throw InvalidArgument("sinogram length mismatch");
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  os << "angle_index,ray_index,value\n" << std::setprecision(17);
  for (Index a = 0; a < s.geom.num_angles; ++a)
    for (Index k = 0; k < s.geom.rays_per_angle; ++k)
      os << a << "," << k << "," << s.values(a * s.geom.rays_per_angle + k) << "\n";
}

/// Raw little-endian float64 values, no header.
inline void save_sinogram_raw(const std::filesystem::path& path, const Vector& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  for (Index i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values(i));
    for (int b = 0; b < 8; ++b) os.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

inline Vector load_sinogram_raw(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  std::vector<double> vals;
  unsigned char buf[8];
  while (is.read(reinterpret_cast<char*>(buf), 8)) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | buf[b];
    vals.push_back(std::bit_cast<double>(bits));
  }
  if (is.gcount() != 0) throw InvalidArgument("truncated sinogram file " + path.string());
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

}  // namespace tpc
