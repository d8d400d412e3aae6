#pragma once

#include <random>

#include "camo/core/image.hpp"
#include "camo/geometry/fixtures.hpp"
#include "camo/geometry/texel_mask.hpp"
#include "camo/render/camera.hpp"
#include "camo/render/scene.hpp"

namespace camo::test {

/// Texture over the mesh's texel mask with textured texels uniform in [lo, hi].
inline TextureMap random_texture(const Mesh& m, int w, int h, std::uint64_t seed, double lo = 0.2, double hi = 0.8) {
  TextureMap t = make_texture(bake_texel_mask(m, w, h), Rgb(0.5, 0.5, 0.5));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (t.textured(x, y)) t.image.set(x, y, Rgb(u(rng), u(rng), u(rng)));
  return t;
}

inline Image random_image(int w, int h, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Image img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : img.data) v = u(rng);
  return img;
}

inline double dot(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

/// Close-up pose on the small fixtures (hemisphere, door) resting near the origin.
inline CameraPose close_pose(double theta, double phi, int size = 64) {
  CameraPose p;
  p.r = 1.6;
  p.theta = theta;
  p.phi = phi;
  p.width = size;
  p.height = size;
  p.target = Vec3(0.0, 0.1, 0.0);
  return p;
}

inline CameraPose car_pose(double theta, double phi, int size = 64, double r = 10.0) {
  CameraPose p;
  p.r = r;
  p.theta = theta;
  p.phi = phi;
  p.width = size;
  p.height = size;
  return p;
}

/// Ambient plus one directional and one point light, dim enough to avoid clamping on albedo <= 0.8.
inline SceneConfig lit_scene() {
  SceneConfig s;
  s.ambient = Rgb(0.35, 0.35, 0.35);
  s.directional_lights.push_back({Vec3(0.3, 1.0, 0.2).normalized(), Rgb(0.5, 0.45, 0.4)});
  s.point_lights.push_back({Vec3(3.0, 4.0, -2.0), Rgb(0.2, 0.25, 0.3)});
  return s;
}

}  // namespace camo::test
