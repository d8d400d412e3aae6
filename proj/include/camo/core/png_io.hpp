#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"

namespace camo::png {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
}

inline void write_rows(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
                       std::vector<std::vector<std::uint8_t>>& rows) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed: " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (auto& row : rows) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::ferror(file.get())) throw IoError("disk error writing " + path.string());
}

}  // namespace detail

/// 8-bit RGB PNG; values are clamped to [0,1] and rounded.
inline void write_rgb(const std::filesystem::path& path, const Image& img) {
  std::vector<std::vector<std::uint8_t>> rows(img.height, std::vector<std::uint8_t>(img.width * 3));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) rows[y][x * 3 + c] = detail::quantize(img.at(x, y, c));
  detail::write_rows(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

/// 1-bit grayscale PNG (white = set).
inline void write_mask(const std::filesystem::path& path, const Mask& mask) {
  const int stride = (mask.width + 7) / 8;
  std::vector<std::vector<std::uint8_t>> rows(mask.height, std::vector<std::uint8_t>(stride, 0));
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask(x, y)) rows[y][x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
  detail::write_rows(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 1, rows);
}

/// Reads any PNG libpng understands and expands it to RGB in [0,1].
inline Image read_rgb(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open for reading: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed: " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png read failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  Image img(w, h);
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
  return img;
}

/// Replaces every stored value by its 8-bit PNG quantization.
inline Image quantized(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = detail::quantize(v) / 255.0;
  return out;
}

}  // namespace camo::png
