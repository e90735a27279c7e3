#pragma once

// Grayscale images with intensities in [0, 1]; PGM (P5) and PNG input,
// 8-bit PGM output.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tpc/errors.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

/// M x N image; pixels(i, j) is row i, column j. vec(image) is the
/// column-major flattening, index i + j*M.
struct GrayImage {
  Matrix pixels;

  GrayImage() = default;
  explicit GrayImage(Matrix p) : pixels(std::move(p)) {}
  GrayImage(Index height, Index width) : pixels(Matrix::Zero(height, width)) {}

  Index height() const { return pixels.rows(); }
  Index width() const { return pixels.cols(); }

  Vector vec() const { return pixels.reshaped(); }
  static GrayImage from_vec(const Vector& v, Index height, Index width) {
    if (v.size() != height * width)
      throw InvalidArgument("GrayImage::from_vec: length " + std::to_string(v.size()) +
                            " != " + std::to_string(height) + "*" + std::to_string(width));
    return GrayImage(v.reshaped(height, width));
  }
};

namespace detail {

inline void skip_pnm_space(std::istream& is) {
  while (true) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      return;
    }
  }
}

inline long read_pnm_int(std::istream& is) {
  skip_pnm_space(is);
  long v = -1;
  if (!(is >> v) || v < 0) throw InvalidArgument("PGM: malformed header");
  return v;
}

inline GrayImage read_pgm(std::istream& is) {
  char magic[2] = {0, 0};
  is.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') throw InvalidArgument("PGM: expected P5 magic");
  const long width = read_pnm_int(is);
  const long height = read_pnm_int(is);
  const long maxval = read_pnm_int(is);
  if (maxval < 1 || maxval > 65535) throw InvalidArgument("PGM: maxval out of range");
  is.get();  // single whitespace before raster
  const bool wide = maxval > 255;
  GrayImage img(height, width);
  for (long i = 0; i < height; ++i)
    for (long j = 0; j < width; ++j) {
      unsigned v = 0;
      if (wide) {
        unsigned char b[2];
        if (!is.read(reinterpret_cast<char*>(b), 2)) throw InvalidArgument("PGM: truncated");
        v = (static_cast<unsigned>(b[0]) << 8) | b[1];
      } else {
        int c = is.get();
        if (c == EOF) throw InvalidArgument("PGM: truncated");
        v = static_cast<unsigned>(c);
      }
      img.pixels(i, j) = std::min(1.0, static_cast<double>(v) / static_cast<double>(maxval));
    }
  return img;
}

inline GrayImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw InvalidArgument("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InvalidArgument("PNG: cannot allocate reader");
  }
  // libpng reports errors through longjmp; nothing with a destructor may be
  // created between setjmp and the reads below.
  std::vector<std::vector<png_byte>> rows;
  std::vector<png_bytep> ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InvalidArgument("PNG: decode error in " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InvalidArgument("PNG: only grayscale images are supported: " + path.string());
  }
  int depth = png_get_bit_depth(png, info);
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto height = png_get_image_height(png, info);
  const auto width = png_get_image_width(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  rows.assign(height, std::vector<png_byte>(rowbytes));
  ptrs.assign(height, nullptr);
  for (png_uint_32 i = 0; i < height; ++i) ptrs[i] = rows[i].data();
  png_read_image(png, ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  GrayImage img(static_cast<Index>(height), static_cast<Index>(width));
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 i = 0; i < height; ++i)
    for (png_uint_32 j = 0; j < width; ++j) {
      const unsigned v = depth == 16 ? (static_cast<unsigned>(rows[i][2 * j]) << 8) | rows[i][2 * j + 1]
                                     : rows[i][j];
      img.pixels(i, j) = v / maxval;
    }
  return img;
}

}  // namespace detail

/// Loads PGM (P5, 8 or 16 bit) or grayscale PNG, scaled by the maximum
/// representable value into [0, 1].
inline GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open image " + path.string());
  char head[8] = {};
  is.read(head, 8);
  if (is.gcount() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(head), 0, 8) == 0)
    return detail::read_png(path);
  is.clear();
  is.seekg(0);
  return detail::read_pgm(is);
}

/// Writes an 8-bit P5 PGM; values are clipped to [0, 1] first.
inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  os << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  for (Index i = 0; i < img.height(); ++i)
    for (Index j = 0; j < img.width(); ++j) {
      const double v = std::clamp(img.pixels(i, j), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  if (!os) throw InvalidArgument("write failed: " + path.string());
}

}  // namespace tpc
