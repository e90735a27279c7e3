#pragma once

// Synthetic periodic textures standing in for photographs of granular
// material: a random tile of Gaussian grains repeated over the image, with an
// optional phase shift and additive grain noise so that two images of the
// same texture share structure without sharing pixels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/image.hpp"
#include "tpc/rng.hpp"

namespace tpc {

struct TextureSpec {
  Index height = 64;
  Index width = 64;
  Index period = 16;
  int grains = 6;
  double grain_sigma = 2.0;  // Gaussian width, or disk radius when edge > 0
  double edge = 0.0;         // > 0: disk grains with a logistic rim this wide
  Index shift_row = 0;
  Index shift_col = 0;
  double noise = 0.0;  // std of additive Gaussian noise before clipping
  std::uint64_t seed = 0;
  std::uint64_t noise_seed = 0;

  void validate() const {
    if (height < 1 || width < 1) throw InvalidArgument("texture: size must be positive");
    if (period < 1) throw InvalidArgument("texture: period must be >= 1");
    if (grains < 1 || !(grain_sigma > 0)) throw InvalidArgument("texture: need grains with positive width");
    if (!(edge >= 0)) throw InvalidArgument("texture: edge must be >= 0");
    if (!(noise >= 0)) throw InvalidArgument("texture: noise must be >= 0");
    if (shift_row < 0 || shift_col < 0) throw InvalidArgument("texture: shifts must be >= 0");
  }
};

/// period x period tile scaled to [0.1, 0.9]. Depends only on seed, period,
/// grains and grain_sigma.
inline Matrix texture_tile(const TextureSpec& spec) {
  spec.validate();
  const Index n = spec.period;
  CounterRng rng(spec.seed, Stream::kTexture);
  struct Grain {
    double row, col, amp;
  };
  std::vector<Grain> grains;
  for (int g = 0; g < spec.grains; ++g) {
    const double r = rng.uniform() * n, c = rng.uniform() * n;
    grains.push_back({r, c, 0.3 + 0.7 * rng.uniform()});
  }
  auto wrap = [n](double d) {
    d = std::fmod(std::abs(d), static_cast<double>(n));
    return std::min(d, n - d);
  };
  Matrix tile = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (const Grain& g : grains) {
        const double dr = wrap(i - g.row), dc = wrap(j - g.col);
        const double d2 = dr * dr + dc * dc;
        if (spec.edge > 0)
          tile(i, j) += g.amp / (1.0 + std::exp((std::sqrt(d2) - spec.grain_sigma) / spec.edge));
        else
          tile(i, j) += g.amp * std::exp(-d2 / (2.0 * spec.grain_sigma * spec.grain_sigma));
      }
  const double lo = tile.minCoeff(), hi = tile.maxCoeff();
  if (hi > lo)
    tile = ((tile.array() - lo) / (hi - lo) * 0.8 + 0.1).matrix();
  else
    tile.setConstant(0.5);
  return tile;
}

inline GrayImage periodic_texture(const TextureSpec& spec) {
  const Matrix tile = texture_tile(spec);
  const Index n = spec.period;
  GrayImage img(spec.height, spec.width);
  CounterRng noise(spec.noise_seed, Stream::kNoise);
  for (Index j = 0; j < spec.width; ++j)
    for (Index i = 0; i < spec.height; ++i) {
      double v = tile((i + spec.shift_row) % n, (j + spec.shift_col) % n);
      if (spec.noise > 0) v += spec.noise * noise.normal();
      img.pixels(i, j) = std::clamp(v, 0.0, 1.0);
    }
  return img;
}

}  // namespace tpc
