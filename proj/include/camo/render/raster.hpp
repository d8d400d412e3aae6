#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "camo/core/image.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/camera.hpp"

namespace camo {

/// Nearest-surface visibility for every pixel center. Shared by every renderer
/// so that silhouettes agree exactly between them.
struct VisibilityBuffer {
  FaceIdBuffer face;
  Grid<double> depth;
  Grid<std::array<double, 3>> bary;  // perspective-correct barycentrics

  bool covered(int x, int y) const { return face(x, y) != kBackground; }
};

namespace detail {

inline double edge(const ScreenPoint& a, const ScreenPoint& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

}  // namespace detail

/// Z-buffered rasterization sampling pixel centers. Coverage is inclusive on
/// edges; the nearer fragment wins and equal depths keep the lower face index.
/// Triangles with a vertex closer than the near plane are skipped.
inline VisibilityBuffer rasterize(const Mesh& mesh, const ViewTransform& view) {
  const int w = view.width, h = view.height;
  VisibilityBuffer vb{FaceIdBuffer(w, h, kBackground), Grid<double>(w, h, std::numeric_limits<double>::infinity()),
                      Grid<std::array<double, 3>>(w, h, {0.0, 0.0, 0.0})};
  std::vector<ScreenPoint> projected(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) projected[i] = view.project(mesh.vertices[i]);

  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& tri = mesh.faces[f];
    const ScreenPoint& a = projected[tri[0]];
    const ScreenPoint& b = projected[tri[1]];
    const ScreenPoint& c = projected[tri[2]];
    if (a.depth < view.near_plane || b.depth < view.near_plane || c.depth < view.near_plane) continue;
    const double area = detail::edge(a, b, c.x, c.y);
    if (area == 0.0 || !std::isfinite(area)) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = detail::edge(b, c, px, py);
        const double w1 = detail::edge(c, a, px, py);
        const double w2 = detail::edge(a, b, px, py);
        const bool inside = area > 0 ? (w0 >= 0 && w1 >= 0 && w2 >= 0) : (w0 <= 0 && w1 <= 0 && w2 <= 0);
        if (!inside) continue;
        const double l0 = w0 / area / a.depth, l1 = w1 / area / b.depth, l2 = w2 / area / c.depth;
        const double inv = l0 + l1 + l2;
        const double depth = 1.0 / inv;
        if (!(depth < vb.depth(x, y))) continue;
        vb.depth(x, y) = depth;
        vb.face(x, y) = static_cast<std::int32_t>(f);
        vb.bary(x, y) = {l0 * depth, l1 * depth, l2 * depth};
      }
    }
  }
  return vb;
}

/// Per-pixel nearest face index, kBackground where no face is hit.
inline FaceIdBuffer render_face_ids(const Mesh& mesh, const CameraPose& pose) {
  return rasterize(mesh, camera_from_spherical(pose)).face;
}

inline Vec3 interpolate_position(const Mesh& m, std::size_t f, const std::array<double, 3>& b) {
  const Face& t = m.faces[f];
  return b[0] * m.vertices[t[0]] + b[1] * m.vertices[t[1]] + b[2] * m.vertices[t[2]];
}

inline Vec2 interpolate_uv(const Mesh& m, std::size_t f, const std::array<double, 3>& b) {
  const FaceUv& t = m.uv[f];
  return b[0] * t[0] + b[1] * t[1] + b[2] * t[2];
}

/// Face normal oriented toward the viewer.
inline Vec3 facing_normal(const Mesh& m, std::size_t f, const Vec3& eye, const Vec3& point) {
  Vec3 n = face_normal(m, f);
  if (n.dot(eye - point) < 0.0) n = -n;
  return n;
}

/// Textured-face coverage of a face-id buffer.
inline Mask textured_pixels(const Mesh& mesh, const FaceIdBuffer& ids) {
  Mask m(ids.width, ids.height, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto f = ids.cells[i];
    m.cells[i] = (f != kBackground && mesh.is_textured(static_cast<std::size_t>(f))) ? 1 : 0;
  }
  return m;
}

}  // namespace camo
