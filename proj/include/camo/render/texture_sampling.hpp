#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "camo/core/image.hpp"

namespace camo {

/// Up to four texels and their non-negative weights (summing to 1 when count > 0).
struct TexelFootprint {
  std::array<std::int32_t, 4> texel{-1, -1, -1, -1};  // y * width + x
  std::array<double, 4> weight{0.0, 0.0, 0.0, 0.0};
  int count = 0;
};

/// Bilinear footprint restricted to textured texels.
///
/// Weights of texels outside the texel mask are dropped and the rest
/// renormalized, so colors never bleed across patch borders and untextured
/// texels never receive gradient. When none of the four neighbours is
/// textured the nearest textured texel within two texels is used alone.
inline TexelFootprint sample_footprint(const TextureMap& tex, const Vec2& uv) {
  const int w = tex.width(), h = tex.height();
  const double tx = uv.x() * w - 0.5, ty = uv.y() * h - 0.5;
  const double fx0 = std::floor(tx), fy0 = std::floor(ty);
  const double fx = tx - fx0, fy = ty - fy0;
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);

  TexelFootprint fp;
  double total = 0.0;
  const std::array<int, 4> xs{x0, x0 + 1, x0, x0 + 1};
  const std::array<int, 4> ys{y0, y0, y0 + 1, y0 + 1};
  const std::array<double, 4> ws{(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  for (int k = 0; k < 4; ++k) {
    const int x = std::clamp(xs[k], 0, w - 1), y = std::clamp(ys[k], 0, h - 1);
    if (!tex.texel_mask(x, y) || ws[k] <= 0.0) continue;
    const std::int32_t id = y * w + x;
    int slot = 0;
    while (slot < fp.count && fp.texel[slot] != id) ++slot;
    if (slot == fp.count) {
      fp.texel[slot] = id;
      ++fp.count;
    }
    fp.weight[slot] += ws[k];
    total += ws[k];
  }
  if (fp.count > 0) {
    for (int k = 0; k < fp.count; ++k) fp.weight[k] /= total;
    return fp;
  }

  double best = 1e300;
  const int cx = static_cast<int>(std::floor(uv.x() * w)), cy = static_cast<int>(std::floor(uv.y() * h));
  for (int y = cy - 2; y <= cy + 2; ++y) {
    for (int x = cx - 2; x <= cx + 2; ++x) {
      if (x < 0 || y < 0 || x >= w || y >= h || !tex.texel_mask(x, y)) continue;
      const double d = (x - tx) * (x - tx) + (y - ty) * (y - ty);
      if (d < best) {
        best = d;
        fp.texel[0] = y * w + x;
      }
    }
  }
  if (best < 1e300) {
    fp.weight[0] = 1.0;
    fp.count = 1;
  }
  return fp;
}

inline Rgb evaluate(const TextureMap& tex, const TexelFootprint& fp) {
  Rgb c = Rgb::Zero();
  for (int k = 0; k < fp.count; ++k) {
    const std::size_t i = static_cast<std::size_t>(fp.texel[k]) * 3;
    c += fp.weight[k] * Rgb(tex.image.data[i], tex.image.data[i + 1], tex.image.data[i + 2]);
  }
  return c;
}

}  // namespace camo
