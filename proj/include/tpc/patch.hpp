#pragma once

// Images <-> patch tensors. Patches are p x r pixel blocks stored as lateral
// slices (p x 1 x r) of a third-order tensor.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/image.hpp"
#include "tpc/rng.hpp"
#include "tpc/sparse.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

/// Non-overlapping partition of an M x N image into p x r patches.
struct PatchGeometry {
  Index p = 0, r = 0, M = 0, N = 0;

  PatchGeometry() = default;
  PatchGeometry(Index p_, Index r_, Index M_, Index N_) : p(p_), r(r_), M(M_), N(N_) {
    if (p < 1 || r < 1 || M < 1 || N < 1)
      throw InvalidArgument("PatchGeometry: all sizes must be positive");
    if (M % p != 0 || N % r != 0)
      throw InvalidArgument("PatchGeometry: patch " + std::to_string(p) + "x" +
                            std::to_string(r) + " does not tile image " + std::to_string(M) +
                            "x" + std::to_string(N));
  }

  Index blocks_down() const { return M / p; }
  Index blocks_across() const { return N / r; }
  Index q() const { return blocks_down() * blocks_across(); }
  Index pixels() const { return M * N; }

  /// M(M/p - 1) + N(N/r - 1), the boundary-pixel count normalizing psi.
  Index boundary_count() const { return M * (M / p - 1) + N * (N / r - 1); }

  /// Lateral slice index of block (u, v); blocks are numbered column-major.
  Index block_index(Index u, Index v) const { return v * blocks_down() + u; }
};

/// The pixel shuffle x = Pi vec(X): forward[t] is the pixel index (i + j*M)
/// of entry t of vec(X) for the p x q x r patch tensor X.
struct PermutationMap {
  std::vector<Index> forward;

  explicit PermutationMap(const PatchGeometry& g) : forward(static_cast<std::size_t>(g.pixels())) {
    const Index q = g.q();
    for (Index k = 0; k < g.r; ++k)
      for (Index j = 0; j < q; ++j) {
        const Index u = j % g.blocks_down(), v = j / g.blocks_down();
        for (Index a = 0; a < g.p; ++a) {
          const Index t = (k * q + j) * g.p + a;
          const Index row = u * g.p + a, col = v * g.r + k;
          forward[static_cast<std::size_t>(t)] = row + col * g.M;
        }
      }
  }

  Index size() const { return static_cast<Index>(forward.size()); }
};

/// x[forward[t]] = w[t].
inline Vector apply_perm(const PermutationMap& pi, const Vector& w) {
  if (w.size() != pi.size())
    throw InvalidArgument("apply_perm: length " + std::to_string(w.size()) + " != " +
                          std::to_string(pi.size()));
  Vector x(w.size());
  for (Index t = 0; t < w.size(); ++t) x(pi.forward[static_cast<std::size_t>(t)]) = w(t);
  return x;
}

/// w[t] = x[forward[t]]; the transpose (and inverse) of apply_perm.
inline Vector apply_perm_adjoint(const PermutationMap& pi, const Vector& x) {
  if (x.size() != pi.size())
    throw InvalidArgument("apply_perm_adjoint: length " + std::to_string(x.size()) + " != " +
                          std::to_string(pi.size()));
  Vector w(x.size());
  for (Index t = 0; t < x.size(); ++t) w(t) = x(pi.forward[static_cast<std::size_t>(t)]);
  return w;
}

/// Sliding-window training patches, scanned row-major over window origins.
/// When more than max_patches windows exist (max_patches > 0), a seeded
/// uniform subsample is kept in scan order.
inline Tensor3 extract_training_patches(const GrayImage& img, Index p, Index r, Index stride,
                                        Index max_patches, std::uint64_t seed) {
  if (p < 1 || r < 1 || p > img.height() || r > img.width())
    throw InvalidArgument("extract_training_patches: patch " + std::to_string(p) + "x" +
                          std::to_string(r) + " larger than image " +
                          std::to_string(img.height()) + "x" + std::to_string(img.width()));
  if (stride < 1) throw InvalidArgument("extract_training_patches: stride must be >= 1");
  std::vector<std::pair<Index, Index>> origins;
  for (Index i = 0; i + p <= img.height(); i += stride)
    for (Index j = 0; j + r <= img.width(); j += stride) origins.emplace_back(i, j);
  if (max_patches > 0 && static_cast<Index>(origins.size()) > max_patches) {
    CounterRng rng(seed, Stream::kPatchSubsample);
    auto keep = rng.sample_without_replacement(origins.size(), static_cast<std::size_t>(max_patches));
    std::sort(keep.begin(), keep.end());
    std::vector<std::pair<Index, Index>> kept;
    kept.reserve(keep.size());
    for (auto idx : keep) kept.push_back(origins[idx]);
    origins = std::move(kept);
  }
  const Index t = static_cast<Index>(origins.size());
  Tensor3 y(p, t, r);
  for (Index j = 0; j < t; ++j) {
    const auto [i0, j0] = origins[static_cast<std::size_t>(j)];
    for (Index k = 0; k < r; ++k)
      for (Index a = 0; a < p; ++a) y(a, j, k) = img.pixels(i0 + a, j0 + k);
  }
  return y;
}

/// p x q x r tensor of the non-overlapping blocks; block (u, v) becomes
/// lateral slice v*(M/p) + u.
inline Tensor3 partition_image(const GrayImage& img, const PatchGeometry& g) {
  if (img.height() != g.M || img.width() != g.N)
    throw InvalidArgument("partition_image: image size does not match geometry");
  const PermutationMap pi(g);
  const Vector w = apply_perm_adjoint(pi, img.vec());
  return Tensor3(g.p, g.q(), g.r, std::vector<double>(w.data(), w.data() + w.size()));
}

/// Inverse of partition_image.
inline GrayImage assemble_image(const Tensor3& x, const PatchGeometry& g) {
  if (x.rows() != g.p || x.cols() != g.q() || x.tubes() != g.r)
    throw InvalidArgument("assemble_image: tensor " + x.shape_string() +
                          " does not match geometry " +
                          Tensor3::dims_string(g.p, g.q(), g.r));
  const PermutationMap pi(g);
  return GrayImage::from_vec(apply_perm(pi, x.vec()), g.M, g.N);
}

/// Finite differences across patch boundaries: one row per adjacent pixel
/// pair straddling a boundary, +1 on the far pixel and -1 on the near one.
/// Columns index pixels in vec(image) order.
inline SparseSystemMatrix boundary_diff_operator(const PatchGeometry& g) {
  const Index rows = g.M * (g.blocks_across() - 1) + g.N * (g.blocks_down() - 1);
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(2 * rows));
  int row = 0;
  auto pix = [&](Index i, Index j) { return static_cast<int>(i + j * g.M); };
  for (Index v = 1; v < g.blocks_across(); ++v)
    for (Index i = 0; i < g.M; ++i, ++row) {
      trips.emplace_back(row, pix(i, v * g.r), 1.0);
      trips.emplace_back(row, pix(i, v * g.r - 1), -1.0);
    }
  for (Index u = 1; u < g.blocks_down(); ++u)
    for (Index j = 0; j < g.N; ++j, ++row) {
      trips.emplace_back(row, pix(u * g.p, j), 1.0);
      trips.emplace_back(row, pix(u * g.p - 1, j), -1.0);
    }
  SparseSystemMatrix l(rows, g.pixels());
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

/// Boundary jump penalty ||L z||^2 / (2 (M(M/p-1) + N(N/r-1))).
inline double psi(const Vector& z, const PatchGeometry& g, const SparseSystemMatrix& l) {
  if (z.size() != g.pixels())
    throw InvalidArgument("psi: length " + std::to_string(z.size()) + " != " +
                          std::to_string(g.pixels()));
  const Index den = g.boundary_count();
  if (den == 0) return 0.0;
  return 0.5 * (l * z).squaredNorm() / static_cast<double>(den);
}

}  // namespace tpc
