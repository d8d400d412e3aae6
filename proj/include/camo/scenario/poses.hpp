#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/render/camera.hpp"

namespace camo {

inline constexpr double kMaxPolarAngle = 45.0;

/// How distances combine with the angle grid.
enum class DistanceMode {
  cross,  // every distance with every (polar, azimuth) pair
  cycle,  // one distance per scene, cycling through the list by scene index
};

struct PoseSamplingConfig {
  std::vector<double> distances{8.0, 10.0, 14.0, 20.0};
  std::vector<double> low_polar_angles{5.0, 10.0, 20.0, 30.0};
  std::vector<double> high_polar_angles{45.0};
  double low_azimuth_step = 18.0;
  double high_azimuth_step = 45.0;
  DistanceMode distance_mode = DistanceMode::cross;
  CameraPose intrinsics;  // fov, size and target; r/theta/phi ignored
};

namespace detail {

inline int azimuth_count(double step, const char* which) {
  if (!(step > 0.0)) throw Error(std::string("pose sampling: ") + which + " must be > 0");
  const double n = 360.0 / step;
  if (std::abs(n - std::round(n)) > 1e-9) throw Error(std::string("pose sampling: ") + which + " must divide 360");
  return static_cast<int>(std::round(n));
}

}  // namespace detail

inline void validate(const PoseSamplingConfig& c) {
  auto check_polar = [](double a) {
    if (a > kMaxPolarAngle) {
      throw Error("pose sampling: polar angle " + std::to_string(a) +
                  " exceeds 45 degrees; detection accuracy drops rapidly at steeper polar angles, so such views are excluded");
    }
    if (a < 0.0) throw Error("pose sampling: polar angles must be >= 0");
  };
  for (double a : c.low_polar_angles) {
    check_polar(a);
    if (a > 30.0) throw Error("pose sampling: low polar angles must be <= 30 degrees");
  }
  for (double a : c.high_polar_angles) {
    check_polar(a);
    if (a <= 30.0) throw Error("pose sampling: high polar angles must lie in (30, 45] degrees");
  }
  for (double r : c.distances)
    if (!(r > 0.0)) throw Error("pose sampling: distances must be > 0");
  detail::azimuth_count(c.low_azimuth_step, "low_azimuth_step");
  detail::azimuth_count(c.high_azimuth_step, "high_azimuth_step");
}

/// The (polar, azimuth) grid at one distance: low angles first, then high.
inline std::vector<CameraPose> sample_angles(const PoseSamplingConfig& c, double distance) {
  validate(c);
  std::vector<CameraPose> out;
  auto sweep = [&](const std::vector<double>& polars, double step) {
    const int n = detail::azimuth_count(step, "azimuth step");
    for (double theta : polars) {
      for (int k = 0; k < n; ++k) {
        CameraPose p = c.intrinsics;
        p.r = distance;
        p.theta = theta;
        p.phi = k * step;
        out.push_back(p);
      }
    }
  };
  sweep(c.low_polar_angles, c.low_azimuth_step);
  sweep(c.high_polar_angles, c.high_azimuth_step);
  return out;
}

/// Full cross-product, ordered distance-major, then polar, then azimuth.
inline std::vector<CameraPose> sample_poses(const PoseSamplingConfig& c) {
  validate(c);
  std::vector<CameraPose> out;
  for (double r : c.distances) {
    auto ring = sample_angles(c, r);
    out.insert(out.end(), ring.begin(), ring.end());
  }
  return out;
}

/// Poses rendered for one scene under the configured distance mode.
inline std::vector<CameraPose> poses_for_scene(const PoseSamplingConfig& c, std::size_t scene_index) {
  if (c.distance_mode == DistanceMode::cross) return sample_poses(c);
  if (c.distances.empty()) return {};
  return sample_angles(c, c.distances[scene_index % c.distances.size()]);
}

/// |distances| * (|low| * 360/low_step + |high| * 360/high_step).
inline std::size_t expected_pose_count(const PoseSamplingConfig& c) {
  return c.distances.size() * (c.low_polar_angles.size() * detail::azimuth_count(c.low_azimuth_step, "low step") +
                               c.high_polar_angles.size() * detail::azimuth_count(c.high_azimuth_step, "high step"));
}

}  // namespace camo
