#pragma once

#include <algorithm>
#include <cmath>

#include "camo/core/image.hpp"
#include "camo/geometry/mesh.hpp"

namespace camo {

/// Center of texel (x, y) in uv coordinates.
inline Vec2 texel_center(int x, int y, int width, int height) {
  return {(x + 0.5) / width, (y + 0.5) / height};
}

/// Inclusive point-in-triangle test that accepts either winding.
inline bool uv_triangle_contains(const FaceUv& t, const Vec2& p) {
  const double w0 = signed_area(t[1], t[2], p);
  const double w1 = signed_area(t[2], t[0], p);
  const double w2 = signed_area(t[0], t[1], p);
  const bool neg = w0 < 0 || w1 < 0 || w2 < 0;
  const bool pos = w0 > 0 || w1 > 0 || w2 > 0;
  return !(neg && pos) && std::abs(signed_area(t[0], t[1], t[2])) > 0.0;
}

/// Marks every texel whose center lies inside some textured face's uv triangle.
/// These are the only texels an attack may modify.
inline Mask bake_texel_mask(const Mesh& m, int width, int height) {
  if (width < 1 || height < 1) throw ShapeError("texel mask dimensions must be >= 1");
  Mask mask(width, height, 0);
  for (std::size_t f = 0; f < m.face_count(); ++f) {
    if (!m.is_textured(f)) continue;
    const FaceUv& t = m.uv[f];
    const double u0 = std::min({t[0].x(), t[1].x(), t[2].x()}), u1 = std::max({t[0].x(), t[1].x(), t[2].x()});
    const double v0 = std::min({t[0].y(), t[1].y(), t[2].y()}), v1 = std::max({t[0].y(), t[1].y(), t[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(u0 * width - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(u1 * width - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(v0 * height - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(v1 * height - 0.5)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (!mask(x, y) && uv_triangle_contains(t, texel_center(x, y, width, height))) mask(x, y) = 1;
  }
  return mask;
}

/// Texture map holding `fill` on textured texels and `outside` elsewhere.
inline TextureMap make_texture(const Mask& texel_mask, const Rgb& fill, const Rgb& outside = Rgb(0.5, 0.5, 0.5)) {
  TextureMap tex{Image(texel_mask.width, texel_mask.height), texel_mask};
  for (int y = 0; y < texel_mask.height; ++y)
    for (int x = 0; x < texel_mask.width; ++x) tex.image.set(x, y, texel_mask(x, y) ? fill : outside);
  return tex;
}

}  // namespace camo
