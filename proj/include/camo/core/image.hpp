#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/types.hpp"

namespace camo {

/// Row-major 2D grid with top-left origin.
template <class T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> cells;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return cells[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const { return cells[static_cast<std::size_t>(y) * width + x]; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t size() const { return cells.size(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

using Mask = Grid<std::uint8_t>;
using FaceIdBuffer = Grid<std::int32_t>;

inline constexpr std::int32_t kBackground = -1;

inline std::size_t count_set(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.cells.begin(), m.cells.end(), [](auto v) { return v != 0; }));
}

/// H x W x 3 floating point image, interleaved RGB, row-major, top-left origin.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}
  Image(int w, int h, const Rgb& fill) : Image(w, h) {
    for (std::size_t i = 0; i < pixels(); ++i) {
      for (int c = 0; c < 3; ++c) data[i * 3 + c] = fill[c];
    }
  }

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c) const { return (static_cast<std::size_t>(y) * width + x) * 3 + c; }

  double& at(int x, int y, int c) { return data[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data[index(x, y, c)]; }

  Rgb rgb(int x, int y) const {
    const std::size_t i = index(x, y, 0);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, const Rgb& v) {
    const std::size_t i = index(x, y, 0);
    data[i] = v[0];
    data[i + 1] = v[1];
    data[i + 2] = v[2];
  }

  /// Mean of the three channels.
  double gray(int x, int y) const {
    const std::size_t i = index(x, y, 0);
    return (data[i] + data[i + 1] + data[i + 2]) / 3.0;
  }

  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const Image&, const Image&) = default;
};

template <class A, class B>
void require_same_shape(const A& a, const B& b, const std::string& what) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError(what + ": expected " + std::to_string(a.width) + "x" + std::to_string(a.height) + ", got " +
                     std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// Compact 8-bit RGB copy of an Image (values quantized to k/255).
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  static Image8 from(const Image& img) {
    Image8 out{img.width, img.height, std::vector<std::uint8_t>(img.data.size())};
    for (std::size_t i = 0; i < img.data.size(); ++i)
      out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
    return out;
  }

  Image to_image() const {
    Image img(width, height);
    for (std::size_t i = 0; i < data.size(); ++i) img.data[i] = data[i] / 255.0;
    return img;
  }
};

/// 2D texture map with the set of texels that belong to textured faces.
struct TextureMap {
  Image image;
  Mask texel_mask;

  int width() const { return image.width; }
  int height() const { return image.height; }
  bool textured(int x, int y) const { return texel_mask(x, y) != 0; }
};

}  // namespace camo
