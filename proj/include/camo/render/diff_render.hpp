#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/camera.hpp"
#include "camo/render/raster.hpp"
#include "camo/render/scene.hpp"
#include "camo/render/texture_sampling.hpp"

namespace camo {

/// Forward state of one covered pixel, enough to replay its texture gradient.
struct PixelRecord {
  std::int32_t face = kBackground;
  std::array<double, 3> bary{0.0, 0.0, 0.0};
  TexelFootprint footprint;  // empty for untextured faces
  Rgb shade = Rgb::Zero();   // per-channel multiplier applied to the albedo
  std::uint8_t live = 0;     // bit c set when channel c was not clamped
};

struct RenderTape {
  int width = 0;
  int height = 0;
  int texture_width = 0;
  int texture_height = 0;
  std::vector<PixelRecord> pixels;  // row-major
};

struct DiffRenderOptions {
  /// Albedo for untextured faces in place of their material (mask renders).
  std::optional<Rgb> untextured_albedo;
};

/// Ambient plus Lambertian irradiance from every directional and point light.
inline Rgb lambert_shade(const SceneConfig& scene, const Vec3& normal, const Vec3& point) {
  Rgb shade = scene.ambient;
  for (const auto& l : scene.directional_lights) shade += std::max(0.0, normal.dot(l.direction.normalized())) * l.intensity;
  for (const auto& l : scene.point_lights) shade += std::max(0.0, normal.dot((l.position - point).normalized())) * l.intensity;
  return shade;
}

inline void require_texture_for(const Mesh& mesh, const TextureMap& tex) {
  if (tex.texel_mask.width != tex.image.width || tex.texel_mask.height != tex.image.height) {
    throw ShapeError("texture image and texel mask sizes differ");
  }
  if (mesh.textured_count() > 0 && (tex.width() < 8 || tex.height() < 8)) {
    throw ShapeError("mesh has textured faces but the texture map is smaller than 8x8");
  }
}

/// Differentiable rendering of the mesh alone (no ground, no shadows).
///
/// Visibility is the hard z-buffer of rasterize(); differentiability is only
/// with respect to texel values, for which every pixel is affine. Pixel color
/// is clamp(albedo * shade) with flat face normals.
inline std::pair<Image, RenderTape> render_diff(const Mesh& mesh, const TextureMap& texture, const CameraPose& pose,
                                                const SceneConfig& scene, const DiffRenderOptions& opt = {}) {
  require_texture_for(mesh, texture);
  const ViewTransform view = camera_from_spherical(pose);
  const VisibilityBuffer vb = rasterize(mesh, view);

  Image img(pose.width, pose.height, scene.background);
  RenderTape tape{pose.width, pose.height, texture.width(), texture.height(),
                  std::vector<PixelRecord>(static_cast<std::size_t>(pose.width) * pose.height)};
  for (int y = 0; y < pose.height; ++y) {
    for (int x = 0; x < pose.width; ++x) {
      const std::int32_t f = vb.face(x, y);
      if (f == kBackground) continue;
      PixelRecord& rec = tape.pixels[static_cast<std::size_t>(y) * pose.width + x];
      rec.face = f;
      rec.bary = vb.bary(x, y);
      const Vec3 point = interpolate_position(mesh, f, rec.bary);
      rec.shade = lambert_shade(scene, facing_normal(mesh, f, view.eye, point), point);

      Rgb albedo = mesh.material(f).albedo;
      if (mesh.is_textured(f)) {
        rec.footprint = sample_footprint(texture, interpolate_uv(mesh, f, rec.bary));
        if (rec.footprint.count > 0) albedo = evaluate(texture, rec.footprint);
      } else if (opt.untextured_albedo) {
        albedo = *opt.untextured_albedo;
      }
      for (int c = 0; c < 3; ++c) {
        const double v = albedo[c] * rec.shade[c];
        if (v >= 0.0 && v <= 1.0) rec.live |= static_cast<std::uint8_t>(1u << c);
        img.at(x, y, c) = clamp01(v);
      }
    }
  }
  return {std::move(img), std::move(tape)};
}

/// Texture gradient of <cotangent, render_diff(texture)>. Contributions are
/// accumulated in row-major pixel order, so the result is order-deterministic.
inline Image render_diff_vjp(const RenderTape& tape, const Image& image_cotangent) {
  if (image_cotangent.width != tape.width || image_cotangent.height != tape.height) {
    throw ShapeError("render_diff_vjp: cotangent shape does not match the rendered image");
  }
  Image grad(tape.texture_width, tape.texture_height, 0.0);
  for (std::size_t p = 0; p < tape.pixels.size(); ++p) {
    const PixelRecord& rec = tape.pixels[p];
    if (rec.face == kBackground || rec.footprint.count == 0) continue;
    for (int c = 0; c < 3; ++c) {
      if (!(rec.live & (1u << c))) continue;
      const double g = image_cotangent.data[p * 3 + c] * rec.shade[c];
      if (g == 0.0) continue;
      for (int k = 0; k < rec.footprint.count; ++k) {
        grad.data[static_cast<std::size_t>(rec.footprint.texel[k]) * 3 + c] += g * rec.footprint.weight[k];
      }
    }
  }
  return grad;
}

}  // namespace camo
