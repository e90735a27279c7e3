#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "tpc/patch.hpp"

using namespace tpc;

namespace {

GrayImage ramp(Index h, Index w) {
  GrayImage img(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) img.pixels(i, j) = static_cast<double>(i * w + j) / (h * w);
  return img;
}

GrayImage random_image(std::mt19937_64& gen, Index h, Index w) {
  return GrayImage(oracle::random_matrix(gen, h, w, 0.0, 1.0));
}

}  // namespace

TEST(ExtractTrainingPatches, NonOverlappingBlocksInRowMajorOrder) {
  const GrayImage img = ramp(4, 4);
  const Tensor3 y = extract_training_patches(img, 2, 2, 2, 0, 0);
  ASSERT_EQ(y.rows(), 2);
  ASSERT_EQ(y.cols(), 4);
  ASSERT_EQ(y.tubes(), 2);
  const std::pair<Index, Index> origins[] = {{0, 0}, {0, 2}, {2, 0}, {2, 2}};
  for (Index j = 0; j < 4; ++j) {
    const Matrix patch = squeeze(y.lateral(j));
    EXPECT_EQ(patch, Matrix(img.pixels.block(origins[j].first, origins[j].second, 2, 2)));
  }
}

TEST(ExtractTrainingPatches, StrideOneCountsAllWindows) {
  EXPECT_EQ(extract_training_patches(ramp(4, 4), 2, 2, 1, 0, 0).cols(), 9);
  EXPECT_EQ(extract_training_patches(ramp(64, 64), 8, 8, 4, 0, 0).cols(), 225);
}

TEST(ExtractTrainingPatches, ConstantImageGivesConstantSlices) {
  GrayImage img(6, 6);
  img.pixels.setConstant(0.25);
  const Tensor3 y = extract_training_patches(img, 3, 2, 1, 0, 0);
  for (double v : y.flat()) EXPECT_EQ(v, 0.25);
}

TEST(ExtractTrainingPatches, SeededSubsampleIsDeterministic) {
  const GrayImage img = ramp(20, 20);
  const Tensor3 a = extract_training_patches(img, 4, 4, 1, 100, 7);
  const Tensor3 b = extract_training_patches(img, 4, 4, 1, 100, 7);
  const Tensor3 c = extract_training_patches(img, 4, 4, 1, 100, 8);
  EXPECT_EQ(a.cols(), 100);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(ExtractTrainingPatches, RejectsOversizedPatch) {
  EXPECT_THROW(extract_training_patches(ramp(4, 4), 5, 2, 1, 0, 0), InvalidArgument);
  EXPECT_THROW(extract_training_patches(ramp(4, 4), 2, 2, 0, 0, 0), InvalidArgument);
}

TEST(PatchGeometry, CountsAndValidation) {
  EXPECT_EQ(PatchGeometry(2, 2, 4, 4).q(), 4);
  EXPECT_EQ(PatchGeometry(10, 10, 200, 200).q(), 400);
  EXPECT_EQ(PatchGeometry(10, 10, 520, 520).q(), 2704);
  EXPECT_EQ(PatchGeometry(10, 10, 200, 200).boundary_count(), 7600);
  EXPECT_THROW(PatchGeometry(3, 2, 4, 4), InvalidArgument);
  EXPECT_THROW(PatchGeometry(2, 3, 4, 4), InvalidArgument);
}

TEST(Partition, RoundTrips) {
  std::mt19937_64 gen(1);
  const GrayImage img = random_image(gen, 4, 4);
  const PatchGeometry g(2, 2, 4, 4);
  const Tensor3 x = partition_image(img, g);
  EXPECT_EQ(x.cols(), 4);
  EXPECT_EQ(assemble_image(x, g).pixels, img.pixels);

  const GrayImage img6 = random_image(gen, 6, 6);
  const PatchGeometry g6(3, 2, 6, 6);
  EXPECT_EQ(assemble_image(partition_image(img6, g6), g6).pixels, img6.pixels);
}

TEST(Partition, BlocksAreColumnMajorLateralSlices) {
  const GrayImage img = ramp(4, 6);
  const PatchGeometry g(2, 3, 4, 6);
  const Tensor3 x = partition_image(img, g);
  for (Index v = 0; v < 2; ++v)
    for (Index u = 0; u < 2; ++u)
      EXPECT_EQ(squeeze(x.lateral(v * 2 + u)), Matrix(img.pixels.block(u * 2, v * 3, 2, 3)));
}

TEST(Partition, PropertyRoundTripOverRandomGeometries) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<Index> small(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const Index p = small(gen), r = small(gen);
    const Index m = p * small(gen), n = r * small(gen);
    const PatchGeometry g(p, r, m, n);
    const GrayImage img = random_image(gen, m, n);
    ASSERT_EQ(assemble_image(partition_image(img, g), g).pixels, img.pixels);

    const PermutationMap pi(g);
    std::vector<Index> sorted = pi.forward;
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < static_cast<Index>(sorted.size()); ++i) ASSERT_EQ(sorted[i], i);

    const Vector v = oracle::random_matrix(gen, m * n, 1);
    ASSERT_EQ(apply_perm_adjoint(pi, apply_perm(pi, v)), v);
    // adjoint: <Pi v, w> = <v, Pi^T w>
    const Vector w = oracle::random_matrix(gen, m * n, 1);
    ASSERT_NEAR(apply_perm(pi, v).dot(w), v.dot(apply_perm_adjoint(pi, w)), 1e-12);
  }
}

TEST(Assemble, EqualSlicesTileTheImage) {
  const PatchGeometry g(2, 3, 4, 9);
  Tensor3 x(2, g.q(), 3);
  Matrix patch(2, 3);
  patch << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  for (Index j = 0; j < g.q(); ++j) x.set_lateral(j, twist(patch));
  const GrayImage img = assemble_image(x, g);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 9; ++j) EXPECT_EQ(img.pixels(i, j), patch(i % 2, j % 3));
  EXPECT_THROW(assemble_image(Tensor3(2, 5, 3), g), InvalidArgument);
}

TEST(BoundaryOperator, RowCountAndConstantKernel) {
  const PatchGeometry g(2, 2, 4, 4);
  const SparseSystemMatrix l = boundary_diff_operator(g);
  EXPECT_EQ(l.rows(), 8);
  EXPECT_EQ(l.cols(), 16);
  EXPECT_LE((l * Vector::Constant(16, 0.7)).norm(), 0.0);

  const PatchGeometry g2(2, 3, 6, 9);
  EXPECT_EQ(boundary_diff_operator(g2).rows(), 6 * 2 + 9 * 2);
}

TEST(Psi, HandEnumeratedBoundaryPairs) {
  // 2x2 blocks with values [[0, 1], [1, 1]] on a 4x4 grid.
  const PatchGeometry g(2, 2, 4, 4);
  GrayImage img(4, 4);
  const double block[2][2] = {{0, 1}, {1, 1}};
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) img.pixels(i, j) = block[i / 2][j / 2];
  // Straddling pairs: (i,1)-(i,2) for i=0..3 and (1,j)-(2,j) for j=0..3.
  double jumps = 0;
  for (Index i = 0; i < 4; ++i) jumps += std::pow(img.pixels(i, 2) - img.pixels(i, 1), 2);
  for (Index j = 0; j < 4; ++j) jumps += std::pow(img.pixels(2, j) - img.pixels(1, j), 2);
  EXPECT_EQ(jumps, 4.0);  // two jumps across each boundary line
  const SparseSystemMatrix l = boundary_diff_operator(g);
  EXPECT_DOUBLE_EQ(psi(img.vec(), g, l), (1.0 / 8.0) * 0.5 * jumps);
}

TEST(Psi, NonNegativeAndQuadratic) {
  std::mt19937_64 gen(3);
  const PatchGeometry g(3, 2, 6, 8);
  const SparseSystemMatrix l = boundary_diff_operator(g);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector z = oracle::random_matrix(gen, 48, 1);
    const double v = psi(z, g, l);
    EXPECT_GE(v, 0.0);
    EXPECT_NEAR(psi(2.5 * z, g, l), 6.25 * v, 1e-12 * v);
  }
  EXPECT_EQ(psi(Vector::Constant(48, 3.0), g, l), 0.0);
  EXPECT_THROW(psi(Vector::Zero(47), g, l), InvalidArgument);
}
