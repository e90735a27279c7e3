#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "tpc/errors.hpp"
#include "tpc/image.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

/// ||x_exact - x|| / ||x_exact||.
inline double relative_error(const Vector& x, const Vector& x_exact) {
  if (x.size() != x_exact.size()) throw InvalidArgument("relative_error: length mismatch");
  const double ref = x_exact.norm();
  if (ref == 0.0) throw InvalidArgument("relative_error: zero reference");
  return (x_exact - x).norm() / ref;
}

inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over all 8x8 windows (uniform weights, population moments,
/// dynamic range 1). Images smaller than the window use a single window
/// covering the whole image.
inline double ssim(const GrayImage& x, const GrayImage& y) {
  if (x.height() != y.height() || x.width() != y.width())
    throw InvalidArgument("ssim: image sizes differ");
  if (x.height() == 0 || x.width() == 0) throw InvalidArgument("ssim: empty image");
  const Index wh = std::min<Index>(kSsimWindow, x.height());
  const Index ww = std::min<Index>(kSsimWindow, x.width());
  const double count = static_cast<double>(wh * ww);
  double total = 0.0;
  Index windows = 0;
  for (Index i = 0; i + wh <= x.height(); ++i)
    for (Index j = 0; j + ww <= x.width(); ++j) {
      const auto a = x.pixels.block(i, j, wh, ww).array();
      const auto b = y.pixels.block(i, j, wh, ww).array();
      const double mx = a.sum() / count, my = b.sum() / count;
      const double vx = (a - mx).square().sum() / count;
      const double vy = (b - my).square().sum() / count;
      const double cxy = ((a - mx) * (b - my)).sum() / count;
      total += ((2 * mx * my + kSsimC1) * (2 * cxy + kSsimC2)) /
               ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
      ++windows;
    }
  return total / static_cast<double>(windows);
}

/// Percentage of entries that are exactly nonzero.
inline double density(const Tensor3& c) {
  if (c.size() == 0) return 0.0;
  const auto nz = std::count_if(c.flat().begin(), c.flat().end(), [](double v) { return v != 0.0; });
  return 100.0 * static_cast<double>(nz) / static_cast<double>(c.size());
}

/// Percentage of entries with magnitude above threshold.
inline double compressibility(const Tensor3& c, double threshold = 1e-4) {
  if (c.size() == 0) return 0.0;
  const auto big = std::count_if(c.flat().begin(), c.flat().end(),
                                 [threshold](double v) { return std::abs(v) > threshold; });
  return 100.0 * static_cast<double>(big) / static_cast<double>(c.size());
}

struct MetricsReport {
  double re = 0.0;
  double ssim = 0.0;
  double density_percent = 0.0;
  double compressibility_percent = 0.0;
  int iterations = 0;
  double wall_time_seconds = 0.0;

  /// Wall time is optional so that reruns can produce byte-identical rows.
  static std::string csv_header(bool with_time = false) {
    std::string h = "iterations,density_percent,compressibility_percent,re_percent,ssim";
    return with_time ? h + ",wall_time_seconds" : h;
  }

  std::string csv_row(bool with_time = false) const {
    std::ostringstream os;
    os << std::setprecision(10) << iterations << "," << density_percent << ","
       << compressibility_percent << "," << 100.0 * re << "," << ssim;
    if (with_time) os << "," << std::setprecision(4) << wall_time_seconds;
    return os.str();
  }
};

}  // namespace tpc
