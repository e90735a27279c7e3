#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tpc/metrics.hpp"

using namespace tpc;

TEST(RelativeError, ExactAndScaled) {
  Vector x(3);
  x << 1, 2, 2;
  EXPECT_EQ(relative_error(x, x), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(Vector::Zero(3), x), 1.0);
  EXPECT_NEAR(relative_error(1.1 * x, x), 0.1, 1e-15);
  EXPECT_THROW(relative_error(x, Vector::Zero(3)), InvalidArgument);
  EXPECT_THROW(relative_error(x, Vector::Zero(2)), InvalidArgument);
}

TEST(Ssim, IdenticalImagesScoreOne) {
  std::mt19937_64 gen(5);
  const GrayImage img(oracle::random_matrix(gen, 20, 17, 0.0, 1.0));
  EXPECT_NEAR(ssim(img, img), 1.0, 1e-12);
}

TEST(Ssim, SingleWindowHandComputed) {
  // One 8x8 window: x constant 0.5, y constant 0.25.
  GrayImage x(8, 8), y(8, 8);
  x.pixels.setConstant(0.5);
  y.pixels.setConstant(0.25);
  const double expected = (2 * 0.5 * 0.25 + kSsimC1) / (0.25 + 0.0625 + kSsimC1);
  EXPECT_NEAR(ssim(x, y), expected, 1e-14);
}

TEST(Ssim, SlidingWindowMatchesBruteForce) {
  std::mt19937_64 gen(6);
  const GrayImage a(oracle::random_matrix(gen, 11, 10, 0.0, 1.0));
  const GrayImage b(oracle::random_matrix(gen, 11, 10, 0.0, 1.0));
  double total = 0;
  int count = 0;
  for (int i = 0; i + 8 <= 11; ++i)
    for (int j = 0; j + 8 <= 10; ++j) {
      double mx = 0, my = 0;
      for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
          mx += a.pixels(i + u, j + v);
          my += b.pixels(i + u, j + v);
        }
      mx /= 64;
      my /= 64;
      double vx = 0, vy = 0, cxy = 0;
      for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
          const double dx = a.pixels(i + u, j + v) - mx, dy = b.pixels(i + u, j + v) - my;
          vx += dx * dx;
          vy += dy * dy;
          cxy += dx * dy;
        }
      vx /= 64;
      vy /= 64;
      cxy /= 64;
      total += (2 * mx * my + 1e-4) * (2 * cxy + 9e-4) / ((mx * mx + my * my + 1e-4) * (vx + vy + 9e-4));
      ++count;
    }
  EXPECT_NEAR(ssim(a, b), total / count, 1e-12);
  EXPECT_THROW(ssim(a, GrayImage(10, 10)), InvalidArgument);
}

TEST(Sparsity, DensityAndCompressibility) {
  Tensor3 c(2, 2, 2);
  c(0, 0, 0) = 1.0;
  c(1, 0, 1) = 1e-6;
  c(1, 1, 1) = -0.5;
  EXPECT_DOUBLE_EQ(density(c), 100.0 * 3 / 8);
  EXPECT_DOUBLE_EQ(compressibility(c), 100.0 * 2 / 8);
  EXPECT_DOUBLE_EQ(compressibility(c, 1e-7), 100.0 * 3 / 8);
  EXPECT_EQ(density(Tensor3(2, 2, 2)), 0.0);
}

TEST(MetricsReport, CsvIsDeterministicWithoutTime) {
  MetricsReport r{0.0825, 0.91, 12.5, 10.0, 300, 1.234};
  EXPECT_EQ(MetricsReport::csv_header(), "iterations,density_percent,compressibility_percent,re_percent,ssim");
  EXPECT_EQ(r.csv_row(), "300,12.5,10,8.25,0.91");
  EXPECT_EQ(r.csv_row(true), "300,12.5,10,8.25,0.91,1.234");
}
