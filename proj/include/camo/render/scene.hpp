#pragma once

#include <string>
#include <vector>

#include "camo/core/types.hpp"

namespace camo {

struct DirectionalLight {
  Vec3 direction{0.0, 1.0, 0.0};  // unit vector pointing toward the light
  Rgb intensity{1.0, 1.0, 1.0};
};

struct PointLight {
  Vec3 position{0.0, 10.0, 0.0};
  Rgb intensity{1.0, 1.0, 1.0};
};

struct GroundPlane {
  bool enabled = true;
  double height = 0.0;
  Rgb albedo{0.4, 0.4, 0.4};
};

/// Untextured box placed in the scene to give the detector other objects.
struct Distractor {
  Vec3 center{4.0, 0.0, 0.0};
  Vec3 size{0.6, 0.5, 0.6};
  Rgb albedo{0.3, 0.5, 0.3};
};

struct SceneConfig {
  Rgb ambient{1.0, 1.0, 1.0};
  std::vector<DirectionalLight> directional_lights;
  std::vector<PointLight> point_lights;
  GroundPlane ground;
  Rgb background{0.55, 0.7, 0.9};
  std::vector<Distractor> distractors;

  /// Ambient light only.
  bool dark_light() const { return directional_lights.empty() && point_lights.empty(); }
};

/// Ambient-only scene used for mask renders.
inline SceneConfig dark_light_scene(double ambient = 1.0) {
  SceneConfig s;
  s.ambient = Rgb::Constant(ambient);
  s.ground.enabled = false;
  s.background = Rgb::Zero();
  return s;
}

}  // namespace camo
