#pragma once

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "camo/core/error.hpp"
#include "camo/core/types.hpp"

namespace camo {

/// Sensor placement in spherical coordinates around a look-at target.
/// theta is the polar angle from the vertical (0 = overhead), phi the azimuth
/// measured from +x toward +z.
struct CameraPose {
  double r = 10.0;
  double theta = 30.0;  // degrees
  double phi = 0.0;     // degrees
  double fov_y = 50.0;  // degrees
  int width = 128;
  int height = 128;
  Vec3 target{0.0, 0.6, 0.0};

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

inline void validate(const CameraPose& p) {
  if (!(p.r > 0.0)) throw Error("camera pose: r must be > 0");
  if (!(p.theta >= 0.0 && p.theta <= 90.0)) throw Error("camera pose: theta must lie in [0, 90]");
  if (!(p.phi >= 0.0 && p.phi < 360.0)) throw Error("camera pose: phi must lie in [0, 360)");
  if (!(p.fov_y > 0.0 && p.fov_y < 180.0)) throw Error("camera pose: fov_y must lie in (0, 180)");
  if (p.width < 16 || p.height < 16) throw Error("camera pose: width and height must be >= 16");
}

/// World position of the sensor for a pose.
inline Vec3 spherical_position(const CameraPose& p) {
  const double th = deg2rad(p.theta), ph = deg2rad(std::fmod(p.phi, 360.0));
  return p.target + p.r * Vec3(std::sin(th) * std::cos(ph), std::cos(th), std::sin(th) * std::sin(ph));
}

/// Projected point: pixel coordinates (top-left origin, pixel centers at
/// half-integers) and positive view depth.
struct ScreenPoint {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
};

struct Ray {
  Vec3 origin;
  Vec3 dir;
};

/// View and perspective transforms of a pose. Camera space is right-handed
/// with x right, y up and the camera looking down -z.
struct ViewTransform {
  Vec3 eye;
  Vec3 right, up, forward;
  Mat4 view = Mat4::Identity();
  Mat4 projection = Mat4::Identity();
  double tan_half_fov = 1.0;
  double aspect = 1.0;
  int width = 0;
  int height = 0;
  double near_plane = 1e-2;
  double far_plane = 1e3;

  Vec3 to_camera(const Vec3& world) const { return (view * world.homogeneous()).head<3>(); }

  ScreenPoint project(const Vec3& world) const {
    const Vec3 c = to_camera(world);
    const double depth = -c.z();
    const double ndc_x = c.x() / (depth * tan_half_fov * aspect);
    const double ndc_y = c.y() / (depth * tan_half_fov);
    return {(ndc_x + 1.0) * 0.5 * width, (1.0 - ndc_y) * 0.5 * height, depth};
  }

  /// Ray through a pixel-space location (use x + 0.5, y + 0.5 for centers).
  Ray ray(double px, double py) const {
    const double ndc_x = 2.0 * px / width - 1.0;
    const double ndc_y = 1.0 - 2.0 * py / height;
    const Vec3 d = forward + ndc_x * tan_half_fov * aspect * right + ndc_y * tan_half_fov * up;
    return {eye, d.normalized()};
  }
};

/// Places the camera at target + r (sin t cos p, cos t, sin t sin p) looking at
/// the target. The up axis is the unit vector (-cos t cos p, sin t, -cos t sin p):
/// world +y projected orthogonally to the view direction, extended continuously
/// to the pole, so theta = 0 with phi = 0 has image-up along world -x.
inline ViewTransform camera_from_spherical(const CameraPose& p) {
  ViewTransform v;
  const double th = deg2rad(p.theta), ph = deg2rad(std::fmod(p.phi, 360.0));
  v.eye = spherical_position(p);
  v.forward = -Vec3(std::sin(th) * std::cos(ph), std::cos(th), std::sin(th) * std::sin(ph));
  v.up = Vec3(-std::cos(th) * std::cos(ph), std::sin(th), -std::cos(th) * std::sin(ph)).normalized();
  v.right = v.forward.cross(v.up).normalized();
  v.width = p.width;
  v.height = p.height;
  v.aspect = static_cast<double>(p.width) / p.height;
  v.tan_half_fov = std::tan(0.5 * deg2rad(p.fov_y));

  Mat3 rot;
  rot.row(0) = v.right.transpose();
  rot.row(1) = v.up.transpose();
  rot.row(2) = -v.forward.transpose();
  v.view.setIdentity();
  v.view.topLeftCorner<3, 3>() = rot;
  v.view.topRightCorner<3, 1>() = -rot * v.eye;

  const double n = v.near_plane, f = v.far_plane;
  v.projection.setZero();
  v.projection(0, 0) = 1.0 / (v.tan_half_fov * v.aspect);
  v.projection(1, 1) = 1.0 / v.tan_half_fov;
  v.projection(2, 2) = -(f + n) / (f - n);
  v.projection(2, 3) = -2.0 * f * n / (f - n);
  v.projection(3, 2) = -1.0;
  return v;
}

}  // namespace camo
