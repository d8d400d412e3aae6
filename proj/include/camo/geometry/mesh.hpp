#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/types.hpp"

namespace camo {

/// Per-face shading parameters. Textured faces take their diffuse color from
/// the texture map and fall back to `albedo` only where no texel is available.
struct Material {
  std::string name = "default";
  Rgb albedo{0.5, 0.5, 0.5};
  double specular = 0.0;
  double shininess = 16.0;

  friend bool operator==(const Material&, const Material&) = default;
};

using Face = std::array<int, 3>;
using FaceUv = std::array<Vec2, 3>;

/// Triangle mesh with per-corner texture coordinates.
///
/// uv origin is the top-left of the texture map; v grows downward, matching
/// the row order of the texel grid. Faces without texture coordinates are
/// non-textured and carry uv (0,0) placeholders.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<FaceUv> uv;
  std::vector<std::uint8_t> textured;
  std::vector<int> material_of_face;
  std::vector<Material> materials{Material{}};

  std::size_t face_count() const { return faces.size(); }
  bool is_textured(std::size_t f) const { return textured[f] != 0; }
  const Material& material(std::size_t f) const { return materials[material_of_face[f]]; }

  int add_material(const Material& m) {
    materials.push_back(m);
    return static_cast<int>(materials.size()) - 1;
  }

  int add_vertex(const Vec3& p) {
    vertices.push_back(p);
    return static_cast<int>(vertices.size()) - 1;
  }

  void add_face(const Face& f, const FaceUv& corner_uv, bool is_tex, int material) {
    faces.push_back(f);
    uv.push_back(corner_uv);
    textured.push_back(is_tex ? 1 : 0);
    material_of_face.push_back(material);
  }

  std::size_t textured_count() const {
    std::size_t n = 0;
    for (auto t : textured) n += t ? 1 : 0;
    return n;
  }
};

inline constexpr double kDegenerateArea = 1e-12;

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

/// Signed area of a uv triangle (positive for counter-clockwise in (u, v) axes).
inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

inline double face_area(const Mesh& m, std::size_t f) {
  const Face& t = m.faces[f];
  return triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
}

inline Vec3 face_normal(const Mesh& m, std::size_t f) {
  const Face& t = m.faces[f];
  const Vec3& a = m.vertices[t[0]];
  return (m.vertices[t[1]] - a).cross(m.vertices[t[2]] - a).normalized();
}

/// Throws GeometryError on the first violated mesh invariant.
inline void validate(const Mesh& m) {
  const std::size_t n = m.faces.size();
  if (m.uv.size() != n || m.textured.size() != n || m.material_of_face.size() != n) {
    throw GeometryError("mesh attribute arrays disagree with face count");
  }
  for (std::size_t f = 0; f < n; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int v = m.faces[f][k];
      if (v < 0 || static_cast<std::size_t>(v) >= m.vertices.size()) {
        throw GeometryError("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                            " outside [0, " + std::to_string(m.vertices.size()) + ")");
      }
      const Vec2& t = m.uv[f][k];
      if (!(t.x() >= 0.0 && t.x() <= 1.0 && t.y() >= 0.0 && t.y() <= 1.0)) {
        throw GeometryError("face " + std::to_string(f) + " has uv outside [0,1]");
      }
    }
    const int mat = m.material_of_face[f];
    if (mat < 0 || static_cast<std::size_t>(mat) >= m.materials.size()) {
      throw GeometryError("face " + std::to_string(f) + " references unknown material");
    }
    if (!(face_area(m, f) > kDegenerateArea)) {
      throw GeometryError("degenerate face " + std::to_string(f) + ": area <= 1e-12");
    }
  }
}

/// Axis-aligned bounds of the mesh vertices.
inline std::pair<Vec3, Vec3> bounds(const Mesh& m) {
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const Vec3& p : m.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

}  // namespace camo
