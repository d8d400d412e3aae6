#pragma once

#include <cmath>
#include <vector>

#include "camo/geometry/mesh.hpp"
#include "camo/geometry/relax.hpp"

// Procedural meshes used as test and demo assets. tools/camo_meshgen writes
// them to OBJ; the committed files under tests/fixtures come from there.
namespace camo::fixtures {

/// Adds an nu x nv grid of quads spanning origin + [0,1]*eu + [0,1]*ev.
/// Winding is chosen so face normals point along `outward`. When `textured`,
/// corners get uv = uv_origin + s*uv_u + t*uv_v.
inline void add_grid(Mesh& m, const Vec3& origin, const Vec3& eu, const Vec3& ev, int nu, int nv, const Vec3& outward,
                     int material, bool textured = false, const Vec2& uv_origin = Vec2::Zero(),
                     const Vec2& uv_u = Vec2::Zero(), const Vec2& uv_v = Vec2::Zero()) {
  const int base = static_cast<int>(m.vertices.size());
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i <= nu; ++i) m.add_vertex(origin + (double(i) / nu) * eu + (double(j) / nv) * ev);
  const bool flip = eu.cross(ev).dot(outward) < 0;
  auto id = [&](int i, int j) { return base + j * (nu + 1) + i; };
  auto uv = [&](int i, int j) -> Vec2 {
    return textured ? Vec2(uv_origin + (double(i) / nu) * uv_u + (double(j) / nv) * uv_v) : Vec2(Vec2::Zero());
  };
  auto tri = [&](std::array<int, 2> a, std::array<int, 2> b, std::array<int, 2> c) {
    if (flip) std::swap(b, c);
    m.add_face({id(a[0], a[1]), id(b[0], b[1]), id(c[0], c[1])}, {uv(a[0], a[1]), uv(b[0], b[1]), uv(c[0], c[1])},
               textured, material);
  };
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      tri({i, j}, {i + 1, j}, {i + 1, j + 1});
      tri({i, j}, {i + 1, j + 1}, {i, j + 1});
    }
  }
}

/// Adds one triangle with normal along `outward`.
inline void add_triangle(Mesh& m, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& outward, int material) {
  const int ia = m.add_vertex(a), ib = m.add_vertex(b), ic = m.add_vertex(c);
  const bool flip = (b - a).cross(c - a).dot(outward) < 0;
  m.add_face(flip ? Face{ia, ic, ib} : Face{ia, ib, ic}, {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()}, false, material);
}

/// Unit right triangle with identity uv.
inline Mesh unit_triangle() {
  Mesh m;
  m.add_vertex({0, 0, 0});
  m.add_vertex({1, 0, 0});
  m.add_vertex({0, 1, 0});
  m.add_face({0, 1, 2}, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, true, 0);
  return m;
}

/// Flat unit square in the z = 0 plane, n x n quads, uv equal to (x, y).
inline Mesh flat_quad(int n = 4) {
  Mesh m;
  add_grid(m, Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), n, n, Vec3(0, 0, 1), 0, true, Vec2(0, 0), Vec2(1, 0),
           Vec2(0, 1));
  return m;
}

/// Hemisphere of the given radius resting on y = 0, built from an n x n
/// square grid (2 n^2 faces; n = 16 gives 512). The grid is mapped to the
/// disk by the concentric map and lifted with the equal-area azimuthal
/// projection. uv is the top-down planar projection u = 0.5 + x, v = 0.5 + z.
inline Mesh hemisphere(double radius = 0.3, int n = 16) {
  Mesh m;
  m.materials[0] = Material{"paint", Rgb(0.7, 0.15, 0.1), 0.5, 32.0};
  std::vector<Vec2> plane;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double a = 2.0 * i / n - 1.0, b = 2.0 * j / n - 1.0;
      double r = 0.0, phi = 0.0;
      if (a == 0.0 && b == 0.0) {
        r = 0.0;
      } else if (std::abs(a) > std::abs(b)) {
        r = a;
        phi = (kPi / 4.0) * (b / a);
      } else {
        r = b;
        phi = kPi / 2.0 - (kPi / 4.0) * (a / b);
      }
      const double dx = r * std::cos(phi), dz = r * std::sin(phi);
      const double rho = std::min(std::hypot(dx, dz), 1.0);
      const double theta = 2.0 * std::asin(rho / std::sqrt(2.0));
      Vec3 p(0.0, radius, 0.0);
      if (rho > 0.0) p = radius * Vec3(std::sin(theta) * dx / rho, std::cos(theta), std::sin(theta) * dz / rho);
      m.add_vertex(p);
    }
  }
  auto id = [&](int i, int j) { return j * (n + 1) + i; };
  auto uv = [&](int v) { return Vec2(0.5 + m.vertices[v].x(), 0.5 + m.vertices[v].z()); };
  auto tri = [&](int a, int b, int c) {
    const Vec3 centroid = (m.vertices[a] + m.vertices[b] + m.vertices[c]) / 3.0;
    const Vec3 normal = (m.vertices[b] - m.vertices[a]).cross(m.vertices[c] - m.vertices[a]);
    if (normal.dot(centroid) < 0) std::swap(b, c);
    m.add_face({a, b, c}, {uv(a), uv(b), uv(c)}, true, 0);
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Split each cell along the diagonal that touches the disk center so
      // the layout is symmetric under the four quadrant reflections.
      const bool diag = (i < n / 2) == (j < n / 2);
      if (diag) {
        tri(id(i, j), id(i + 1, j), id(i + 1, j + 1));
        tri(id(i, j), id(i + 1, j + 1), id(i, j + 1));
      } else {
        tri(id(i, j), id(i + 1, j), id(i, j + 1));
        tri(id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
      }
    }
  }
  return m;
}

/// Curved panel shaped like a car door: a cylindrical section of radius 0.45
/// spanning +-55 degrees, 0.8 long, with uv from a flat projection onto the
/// panel's chord plane (stretched toward the curved edges).
inline Mesh door_panel(int nu = 12, int nv = 12) {
  Mesh m;
  m.materials[0] = Material{"paint", Rgb(0.2, 0.3, 0.7), 0.5, 32.0};
  const double radius = 0.45, half = deg2rad(55.0), length = 0.8;
  for (int j = 0; j <= nv; ++j) {
    const double a = -half + 2.0 * half * j / nv;
    for (int i = 0; i <= nu; ++i) m.add_vertex(Vec3(length * i / nu, radius * std::sin(a), radius * std::cos(a)));
  }
  auto id = [&](int i, int j) { return j * (nu + 1) + i; };
  auto uv = [&](int v) { return Vec2(0.1 + m.vertices[v].x(), 0.5 - m.vertices[v].y()); };
  auto tri = [&](int a, int b, int c) {
    const Vec3 centroid = (m.vertices[a] + m.vertices[b] + m.vertices[c]) / 3.0;
    const Vec3 normal = (m.vertices[b] - m.vertices[a]).cross(m.vertices[c] - m.vertices[a]);
    const Vec3 outward(0.0, centroid.y(), centroid.z());
    if (normal.dot(outward) < 0) std::swap(b, c);
    m.add_face({a, b, c}, {uv(a), uv(b), uv(c)}, true, 0);
  };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      tri(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      tri(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  return m;
}

/// Atlas rectangles of the car's textured patches, in the order the faces
/// are emitted by car().
struct CarAtlas {
  std::vector<AtlasRect> rects;
};

inline constexpr double kCarUvScale = 0.2;  // uv units per scene unit

/// Sedan-like mesh of about 4.4 x 1.8 x 1.6 scene units resting on y = 0,
/// centered on the origin with its length along x. Body sides, hood, trunk
/// lid and roof are textured; windows, bumpers, trim and wheels are not.
inline Mesh car(CarAtlas* atlas = nullptr) {
  Mesh m;
  m.materials[0] = Material{"paint", Rgb(0.72, 0.1, 0.08), 0.6, 48.0};
  const int glass = m.add_material({"glass", Rgb(0.1, 0.12, 0.16), 0.9, 96.0});
  const int bumper = m.add_material({"bumper", Rgb(0.18, 0.18, 0.19), 0.3, 16.0});
  const int lights = m.add_material({"lights", Rgb(0.75, 0.62, 0.55), 0.5, 32.0});
  const int trim = m.add_material({"trim", Rgb(0.06, 0.06, 0.06), 0.2, 16.0});
  const int tire = m.add_material({"tire", Rgb(0.04, 0.04, 0.04), 0.05, 8.0});
  const int hub = m.add_material({"hub", Rgb(0.55, 0.56, 0.58), 0.7, 64.0});

  const double s = kCarUvScale;
  const double x0 = -2.2, x1 = 2.2, y0 = 0.35, y1 = 1.05, zb = 0.9;
  const double cx0 = -1.2, cx1 = 0.9, rx0 = -0.9, rx1 = 0.4, ytop = 1.6, zc = 0.8;
  std::vector<AtlasRect> rects;
  auto rect = [&](double u0, double v0, double du, double dv) {
    rects.push_back({Vec2(u0, v0), Vec2(u0 + du, v0 + dv)});
  };

  // Left and right body sides.
  add_grid(m, Vec3(x0, y1, zb), Vec3(x1 - x0, 0, 0), Vec3(0, y0 - y1, 0), 16, 3, Vec3(0, 0, 1), 0, true,
           Vec2(0.04, 0.04), Vec2(s * (x1 - x0), 0), Vec2(0, s * (y1 - y0)));
  rect(0.04, 0.04, s * (x1 - x0), s * (y1 - y0));
  add_grid(m, Vec3(x0, y1, -zb), Vec3(x1 - x0, 0, 0), Vec3(0, y0 - y1, 0), 16, 3, Vec3(0, 0, -1), 0, true,
           Vec2(0.04, 0.22), Vec2(s * (x1 - x0), 0), Vec2(0, s * (y1 - y0)));
  rect(0.04, 0.22, s * (x1 - x0), s * (y1 - y0));
  // Hood and trunk lid.
  add_grid(m, Vec3(cx1, y1, -zb), Vec3(x1 - cx1, 0, 0), Vec3(0, 0, 2 * zb), 5, 6, Vec3(0, 1, 0), 0, true,
           Vec2(0.04, 0.42), Vec2(s * (x1 - cx1), 0), Vec2(0, s * 2 * zb));
  rect(0.04, 0.42, s * (x1 - cx1), s * 2 * zb);
  add_grid(m, Vec3(x0, y1, -zb), Vec3(cx0 - x0, 0, 0), Vec3(0, 0, 2 * zb), 4, 6, Vec3(0, 1, 0), 0, true,
           Vec2(0.36, 0.42), Vec2(s * (cx0 - x0), 0), Vec2(0, s * 2 * zb));
  rect(0.36, 0.42, s * (cx0 - x0), s * 2 * zb);
  // Roof.
  add_grid(m, Vec3(rx0, ytop, -zc), Vec3(rx1 - rx0, 0, 0), Vec3(0, 0, 2 * zc), 5, 6, Vec3(0, 1, 0), 0, true,
           Vec2(0.62, 0.42), Vec2(s * (rx1 - rx0), 0), Vec2(0, s * 2 * zc));
  rect(0.62, 0.42, s * (rx1 - rx0), s * 2 * zc);

  // Bumper faces, trim strips beside the cabin.
  add_grid(m, Vec3(x1, y0, -zb), Vec3(0, y1 - y0, 0), Vec3(0, 0, 2 * zb), 2, 4, Vec3(1, 0, 0), bumper);
  add_grid(m, Vec3(x0, y0, -zb), Vec3(0, y1 - y0, 0), Vec3(0, 0, 2 * zb), 2, 4, Vec3(-1, 0, 0), lights);
  add_grid(m, Vec3(cx0, y1, zc), Vec3(cx1 - cx0, 0, 0), Vec3(0, 0, zb - zc), 4, 1, Vec3(0, 1, 0), trim);
  add_grid(m, Vec3(cx0, y1, -zb), Vec3(cx1 - cx0, 0, 0), Vec3(0, 0, zb - zc), 4, 1, Vec3(0, 1, 0), trim);

  // Cabin glass: windshield, rear window, two side windows.
  add_grid(m, Vec3(cx1, y1, -zc), Vec3(rx1 - cx1, ytop - y1, 0), Vec3(0, 0, 2 * zc), 1, 3, Vec3(1, 1, 0), glass);
  add_grid(m, Vec3(cx0, y1, -zc), Vec3(rx0 - cx0, ytop - y1, 0), Vec3(0, 0, 2 * zc), 1, 3, Vec3(-1, 1, 0), glass);
  for (double side : {1.0, -1.0}) {
    const Vec3 a(cx0, y1, side * zc), b(cx1, y1, side * zc), c(rx1, ytop, side * zc), d(rx0, ytop, side * zc);
    add_triangle(m, a, b, c, Vec3(0, 0, side), glass);
    add_triangle(m, a, c, d, Vec3(0, 0, side), glass);
  }

  // Wheels: 16-segment cylinders along z with an outer hub cap.
  const int segments = 16;
  const double wr = 0.35;
  for (double wx : {-1.4, 1.4}) {
    for (double side : {1.0, -1.0}) {
      const double zin = side * (zb - 0.1), zout = side * (zb + 0.15);
      const Vec3 hub_center(wx, wr, zout);
      for (int k = 0; k < segments; ++k) {
        const double a0 = 2 * kPi * k / segments, a1 = 2 * kPi * (k + 1) / segments;
        const Vec3 r0(wx + wr * std::cos(a0), wr + wr * std::sin(a0), 0), r1(wx + wr * std::cos(a1), wr + wr * std::sin(a1), 0);
        const Vec3 p0 = r0 + Vec3(0, 0, zin), p1 = r1 + Vec3(0, 0, zin), p2 = r1 + Vec3(0, 0, zout),
                   p3 = r0 + Vec3(0, 0, zout);
        const Vec3 radial(std::cos(0.5 * (a0 + a1)), std::sin(0.5 * (a0 + a1)), 0);
        add_triangle(m, p0, p1, p2, radial, tire);
        add_triangle(m, p0, p2, p3, radial, tire);
        add_triangle(m, hub_center, p3, p2, Vec3(0, 0, side), hub);
      }
    }
  }
  if (atlas) atlas->rects = rects;
  return m;
}

/// Closed axis-aligned box (five faces; the bottom is omitted) resting on y = 0.
inline Mesh box(const Vec3& center, const Vec3& size, const Material& material) {
  Mesh m;
  m.materials[0] = material;
  const Vec3 lo(center.x() - 0.5 * size.x(), 0.0, center.z() - 0.5 * size.z());
  const Vec3 hi = lo + size;
  add_grid(m, Vec3(lo.x(), hi.y(), lo.z()), Vec3(size.x(), 0, 0), Vec3(0, 0, size.z()), 1, 1, Vec3(0, 1, 0), 0);
  add_grid(m, lo, Vec3(size.x(), 0, 0), Vec3(0, size.y(), 0), 1, 1, Vec3(0, 0, -1), 0);
  add_grid(m, Vec3(lo.x(), 0, hi.z()), Vec3(size.x(), 0, 0), Vec3(0, size.y(), 0), 1, 1, Vec3(0, 0, 1), 0);
  add_grid(m, lo, Vec3(0, 0, size.z()), Vec3(0, size.y(), 0), 1, 1, Vec3(-1, 0, 0), 0);
  add_grid(m, Vec3(hi.x(), 0, lo.z()), Vec3(0, 0, size.z()), Vec3(0, size.y(), 0), 1, 1, Vec3(1, 0, 0), 0);
  return m;
}

}  // namespace camo::fixtures
