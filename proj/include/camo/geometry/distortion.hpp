#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/geometry/mesh.hpp"

namespace camo {

/// Singular values of a uv -> 3D triangle map, largest first.
struct Sigmas {
  double major = 0.0;
  double minor = 0.0;
};

/// 3x2 Jacobian of the affine map taking the uv triangle onto the 3D triangle.
inline Eigen::Matrix<double, 3, 2> uv_jacobian(const std::array<Vec3, 3>& p, const std::array<Vec2, 3>& t) {
  Eigen::Matrix<double, 3, 2> edges;
  edges.col(0) = p[1] - p[0];
  edges.col(1) = p[2] - p[0];
  Eigen::Matrix2d uv_edges;
  uv_edges.col(0) = t[1] - t[0];
  uv_edges.col(1) = t[2] - t[0];
  if (!(std::abs(0.5 * uv_edges.determinant()) >= kDegenerateArea)) {
    throw GeometryError("uv-degenerate triangle: area < 1e-12");
  }
  return edges * uv_edges.inverse();
}

/// Closed-form singular values through the eigenvalues of the 2x2 Gram matrix.
inline Sigmas triangle_sigmas(const std::array<Vec3, 3>& p, const std::array<Vec2, 3>& t) {
  const auto j = uv_jacobian(p, t);
  const double a = j.col(0).squaredNorm();
  const double b = j.col(0).dot(j.col(1));
  const double c = j.col(1).squaredNorm();
  const double mean = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {std::sqrt(std::max(mean + disc, 0.0)), std::sqrt(std::max(mean - disc, 0.0))};
}

inline std::array<Vec3, 3> face_positions(const Mesh& m, std::size_t f) {
  const Face& t = m.faces[f];
  return {m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]};
}

inline Sigmas face_singular_values(const Mesh& m, std::size_t f) {
  if (f >= m.face_count()) throw GeometryError("face index out of range");
  return triangle_sigmas(face_positions(m, f), m.uv[f]);
}

/// Area-weighted squared deviation of both singular values from 1.
inline double distortion_term(double area, const Sigmas& s) {
  return area * ((s.major - 1.0) * (s.major - 1.0) + (s.minor - 1.0) * (s.minor - 1.0));
}

struct FaceDistortion {
  std::size_t face = 0;
  Sigmas sigmas;
  double area = 0.0;
  double term = 0.0;
};

struct DistortionReport {
  std::vector<FaceDistortion> faces;  // textured faces only, in face order
  double energy = 0.0;
  std::size_t stretched_count = 0;
  std::size_t compressed_count = 0;
  double tolerance = 0.05;
};

/// Sums the distortion term over textured faces. A face counts as stretched
/// when sigma_max > 1 + tolerance and as compressed when sigma_min < 1 - tolerance.
inline DistortionReport distortion_energy(const Mesh& m, double tolerance = 0.05) {
  DistortionReport r;
  r.tolerance = tolerance;
  for (std::size_t f = 0; f < m.face_count(); ++f) {
    if (!m.is_textured(f)) continue;
    FaceDistortion d;
    d.face = f;
    d.sigmas = face_singular_values(m, f);
    d.area = face_area(m, f);
    d.term = distortion_term(d.area, d.sigmas);
    r.energy += d.term;
    if (d.sigmas.major > 1.0 + tolerance) ++r.stretched_count;
    if (d.sigmas.minor < 1.0 - tolerance) ++r.compressed_count;
    r.faces.push_back(d);
  }
  return r;
}

/// Paints every textured uv triangle by its distortion: purple where the map
/// stretches, red where it compresses, gray where it is close to isometric.
inline Image distortion_heatmap(const Mesh& m, const DistortionReport& report, int width, int height) {
  Image img(width, height, Rgb(1.0, 1.0, 1.0));
  const Rgb gray(0.6, 0.6, 0.6), purple(0.55, 0.1, 0.75), red(0.85, 0.1, 0.1);
  for (const FaceDistortion& d : report.faces) {
    const double stretch = std::clamp(std::log(std::max(d.sigmas.major, 1e-9)) / std::log(2.0), 0.0, 1.0);
    const double compress = std::clamp(-std::log(std::max(d.sigmas.minor, 1e-9)) / std::log(2.0), 0.0, 1.0);
    Rgb color = gray;
    if (stretch >= compress) {
      color = (1.0 - stretch) * gray + stretch * purple;
    } else {
      color = (1.0 - compress) * gray + compress * red;
    }
    const FaceUv& t = m.uv[d.face];
    const double x0 = std::min({t[0].x(), t[1].x(), t[2].x()}) * width;
    const double x1 = std::max({t[0].x(), t[1].x(), t[2].x()}) * width;
    const double y0 = std::min({t[0].y(), t[1].y(), t[2].y()}) * height;
    const double y1 = std::max({t[0].y(), t[1].y(), t[2].y()}) * height;
    const double area = signed_area(t[0], t[1], t[2]);
    for (int y = std::max(0, static_cast<int>(y0)); y < std::min(height, static_cast<int>(y1) + 1); ++y) {
      for (int x = std::max(0, static_cast<int>(x0)); x < std::min(width, static_cast<int>(x1) + 1); ++x) {
        const Vec2 c((x + 0.5) / width, (y + 0.5) / height);
        const double w0 = signed_area(t[1], t[2], c), w1 = signed_area(t[2], t[0], c), w2 = signed_area(t[0], t[1], c);
        const bool inside = area > 0 ? (w0 >= 0 && w1 >= 0 && w2 >= 0) : (w0 <= 0 && w1 <= 0 && w2 <= 0);
        if (inside) img.set(x, y, color);
      }
    }
  }
  return img;
}

}  // namespace camo
