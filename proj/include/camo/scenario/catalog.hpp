#pragma once

#include <cmath>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/random.hpp"
#include "camo/render/scene.hpp"

namespace camo {

/// Sampling bounds of the desk scene catalog.
struct SceneRanges {
  double ambient_min = 0.35, ambient_max = 0.6;
  double sun_intensity_min = 0.45, sun_intensity_max = 0.8;
  double sun_elevation_min = 25.0, sun_elevation_max = 70.0;  // degrees above the horizon
  double ground_min = 0.25, ground_max = 0.55;
  double sky_min = 0.45, sky_max = 0.9;
  int distractors_min = 1, distractors_max = 3;
  double distractor_radius_min = 3.6, distractor_radius_max = 6.0;
  double distractor_size_min = 0.4, distractor_size_max = 1.1;
};

struct CatalogScene {
  int id = 0;
  bool test = false;
  SceneConfig scene;
};

struct SceneCatalog {
  std::vector<CatalogScene> scenes;

  std::vector<int> ids(bool test) const {
    std::vector<int> out;
    for (const auto& s : scenes)
      if (s.test == test) out.push_back(s.id);
    return out;
  }
  std::vector<int> train_ids() const { return ids(false); }
  std::vector<int> test_ids() const { return ids(true); }

  const CatalogScene& at(int id) const {
    for (const auto& s : scenes)
      if (s.id == id) return s;
    throw Error("scene catalog: unknown scene id " + std::to_string(id));
  }
};

/// One lit outdoor-like scene drawn from the ranges.
inline SceneConfig sample_scene(Rng& rng, const SceneRanges& r = {}) {
  SceneConfig s;
  s.ambient = Rgb::Constant(uniform(rng, r.ambient_min, r.ambient_max));
  const double elev = deg2rad(uniform(rng, r.sun_elevation_min, r.sun_elevation_max));
  const double azim = uniform(rng, 0.0, 2.0 * kPi);
  const double sun = uniform(rng, r.sun_intensity_min, r.sun_intensity_max);
  s.directional_lights.push_back(
      {Vec3(std::cos(elev) * std::cos(azim), std::sin(elev), std::cos(elev) * std::sin(azim)), Rgb(sun, sun, 0.92 * sun)});
  const double g = uniform(rng, r.ground_min, r.ground_max);
  s.ground.albedo = Rgb(g * uniform(rng, 0.9, 1.1), g, g * uniform(rng, 0.85, 1.05)).cwiseMin(1.0);
  const double sky = uniform(rng, r.sky_min, r.sky_max);
  s.background = Rgb(sky * uniform(rng, 0.6, 0.9), sky * uniform(rng, 0.8, 0.95), sky);
  const int n = r.distractors_min + static_cast<int>(rng() % static_cast<std::uint64_t>(r.distractors_max - r.distractors_min + 1));
  for (int i = 0; i < n; ++i) {
    Distractor d;
    const double a = uniform(rng, 0.0, 2.0 * kPi), rad = uniform(rng, r.distractor_radius_min, r.distractor_radius_max);
    d.size = Vec3(uniform(rng, r.distractor_size_min, r.distractor_size_max),
                  uniform(rng, r.distractor_size_min, r.distractor_size_max),
                  uniform(rng, r.distractor_size_min, r.distractor_size_max));
    d.center = Vec3(rad * std::cos(a), 0.5 * d.size.y(), rad * std::sin(a));
    d.albedo = Rgb(uniform(rng, 0.15, 0.6), uniform(rng, 0.2, 0.65), uniform(rng, 0.1, 0.5));
    s.distractors.push_back(d);
  }
  return s;
}

/// Train scenes get ids 0..n_train-1, test scenes the following ids.
inline SceneCatalog build_scene_catalog(int n_train, int n_test, std::uint64_t seed, const SceneRanges& ranges = {}) {
  if (n_train < 1 || n_test < 1) throw Error("scene catalog: train and test counts must be >= 1");
  SceneCatalog c;
  for (int i = 0; i < n_train + n_test; ++i) {
    Rng rng(derive_seed(seed, 0x5CE7E, static_cast<std::uint64_t>(i)));
    c.scenes.push_back({i, i >= n_train, sample_scene(rng, ranges)});
  }
  return c;
}

}  // namespace camo
