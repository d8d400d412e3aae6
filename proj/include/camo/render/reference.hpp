#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "camo/core/box.hpp"
#include "camo/core/image.hpp"
#include "camo/geometry/fixtures.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/bvh.hpp"
#include "camo/render/camera.hpp"
#include "camo/render/diff_render.hpp"
#include "camo/render/raster.hpp"
#include "camo/render/scene.hpp"
#include "camo/render/texture_sampling.hpp"

namespace camo {

/// Photoreal stand-in frame: the image plus the geometry-derived labels.
struct ReferenceFrame {
  Image image;
  CameraPose pose;
  int scene_id = 0;
  std::optional<Box> box;          // tight bound of pixels whose primary ray hits the vehicle
  std::vector<LabeledBox> objects; // distractor boxes visible in the frame
  Mask vehicle_mask;
};

/// Tight pixel bound of the set cells of a mask.
inline std::optional<Box> mask_bounds(const Mask& m) {
  int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return Box{double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
}

namespace detail {

inline void append(Mesh& dst, const Mesh& src) {
  const int vbase = static_cast<int>(dst.vertices.size());
  const int mbase = static_cast<int>(dst.materials.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  dst.materials.insert(dst.materials.end(), src.materials.begin(), src.materials.end());
  for (std::size_t f = 0; f < src.face_count(); ++f) {
    const Face& t = src.faces[f];
    dst.add_face({t[0] + vbase, t[1] + vbase, t[2] + vbase}, src.uv[f], src.is_textured(f),
                 src.material_of_face[f] + mbase);
  }
}

}  // namespace detail

/// Deterministic ray-cast rendering: ambient, Lambertian and Blinn-Phong
/// specular terms, hard shadows traced toward every light, a ground plane and
/// the scene's distractor boxes.
///
/// Primary visibility comes from the same rasterizer the differentiable path
/// uses, so the vehicle silhouette agrees pixel-for-pixel with render_face_ids.
/// Pixels that miss all geometry are intersected with the ground plane.
inline ReferenceFrame render_ref(const Mesh& mesh, const TextureMap& texture, const CameraPose& pose,
                                 const SceneConfig& scene, int scene_id = 0) {
  require_texture_for(mesh, texture);
  Mesh world = mesh;
  std::vector<std::size_t> distractor_start;
  for (const Distractor& d : scene.distractors) {
    distractor_start.push_back(world.face_count());
    detail::append(world, fixtures::box(d.center, d.size, Material{"distractor", d.albedo, 0.2, 16.0}));
  }
  const std::size_t vehicle_faces = mesh.face_count();

  const ViewTransform view = camera_from_spherical(pose);
  const VisibilityBuffer vb = rasterize(world, view);
  const Bvh bvh(world);

  auto lit = [&](const Vec3& point, const Vec3& normal, const Vec3& to_eye, const Rgb& albedo, double specular,
                 double shininess) {
    Rgb color = albedo.cwiseProduct(scene.ambient);
    const Vec3 origin = point + normal * (1e-6 * (1.0 + point.norm()));
    auto add = [&](const Vec3& to_light, double distance, const Rgb& intensity) {
      const double ndl = normal.dot(to_light);
      if (ndl <= 0.0) return;
      if (bvh.occluded(origin, to_light, 0.0, distance)) return;
      color += ndl * albedo.cwiseProduct(intensity);
      if (specular > 0.0) {
        const double ndh = std::max(0.0, normal.dot((to_light + to_eye).normalized()));
        color += specular * std::pow(ndh, shininess) * intensity;
      }
    };
    for (const auto& l : scene.directional_lights) add(l.direction.normalized(), 1e300, l.intensity);
    for (const auto& l : scene.point_lights) {
      const Vec3 d = l.position - point;
      add(d.normalized(), d.norm(), l.intensity);
    }
    return color;
  };

  ReferenceFrame frame;
  frame.pose = pose;
  frame.scene_id = scene_id;
  frame.image = Image(pose.width, pose.height, scene.background);
  frame.vehicle_mask = Mask(pose.width, pose.height, 0);
  std::vector<Mask> distractor_masks(scene.distractors.size(), Mask(pose.width, pose.height, 0));

  for (int y = 0; y < pose.height; ++y) {
    for (int x = 0; x < pose.width; ++x) {
      const std::int32_t f = vb.face(x, y);
      if (f != kBackground) {
        const auto face = static_cast<std::size_t>(f);
        const Vec3 point = interpolate_position(world, face, vb.bary(x, y));
        const Vec3 normal = facing_normal(world, face, view.eye, point);
        const Material& mat = world.material(face);
        Rgb albedo = mat.albedo;
        if (world.is_textured(face)) {
          const TexelFootprint fp = sample_footprint(texture, interpolate_uv(world, face, vb.bary(x, y)));
          if (fp.count > 0) albedo = evaluate(texture, fp);
        }
        const Rgb c = lit(point, normal, (view.eye - point).normalized(), albedo, mat.specular, mat.shininess);
        for (int ch = 0; ch < 3; ++ch) frame.image.at(x, y, ch) = clamp01(c[ch]);
        if (face < vehicle_faces) {
          frame.vehicle_mask(x, y) = 1;
        } else {
          for (std::size_t d = distractor_start.size(); d-- > 0;) {
            if (face >= distractor_start[d]) {
              distractor_masks[d](x, y) = 1;
              break;
            }
          }
        }
        continue;
      }
      if (!scene.ground.enabled) continue;
      const Ray ray = view.ray(x + 0.5, y + 0.5);
      if (!(ray.dir.y() < 0.0)) continue;
      const double t = (scene.ground.height - ray.origin.y()) / ray.dir.y();
      if (!(t > 0.0)) continue;
      const Vec3 point = ray.origin + t * ray.dir;
      const Rgb c = lit(point, Vec3(0, 1, 0), -ray.dir, scene.ground.albedo, 0.0, 1.0);
      for (int ch = 0; ch < 3; ++ch) frame.image.at(x, y, ch) = clamp01(c[ch]);
    }
  }
  frame.box = mask_bounds(frame.vehicle_mask);
  for (const Mask& m : distractor_masks) {
    if (count_set(m) < 4) continue;
    if (auto b = mask_bounds(m)) frame.objects.push_back({ObjectClass::distractor, *b});
  }
  return frame;
}

}  // namespace camo
