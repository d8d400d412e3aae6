#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/geometry/distortion.hpp"
#include "camo/geometry/mesh.hpp"

namespace camo {

/// Axis-aligned region of the texture map owned by one textured patch.
struct AtlasRect {
  Vec2 min{0.0, 0.0};
  Vec2 max{1.0, 1.0};

  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  double area() const { return width() * height(); }
  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

struct RelaxOptions {
  int iterations = 200;
  AtlasRect rect;
};

/// Relaxed mesh plus the patch energy after initialization and after every sweep.
struct RelaxTrace {
  Mesh mesh;
  std::vector<double> energy_history;
  bool used_unfolding = false;
};

namespace detail {

/// One connected, seam-free set of textured faces with per-vertex uv.
struct UvPatch {
  std::vector<std::size_t> faces;
  std::vector<int> vertices;                       // mesh vertex ids
  std::map<int, int> local;                        // mesh vertex id -> patch vertex id
  std::vector<Vec2> uv;                            // per patch vertex
  std::vector<std::array<int, 3>> tris;            // patch vertex ids per face
  std::vector<double> area3d;                      // per face
  std::vector<std::vector<int>> incident;          // patch vertex -> local face ids
};

inline std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

inline bool same_uv(const Vec2& a, const Vec2& b) { return a == b; }

inline UvPatch extract_patch(const Mesh& m, std::size_t seed) {
  if (seed >= m.face_count() || !m.is_textured(seed)) throw GeometryError("seed face must be a textured face");

  std::map<std::pair<int, int>, std::vector<std::pair<std::size_t, int>>> edges;  // -> (face, corner)
  for (std::size_t f = 0; f < m.face_count(); ++f) {
    if (!m.is_textured(f)) continue;
    for (int k = 0; k < 3; ++k) edges[edge_key(m.faces[f][k], m.faces[f][(k + 1) % 3])].emplace_back(f, k);
  }
  auto uv_of = [&](std::size_t f, int vid) {
    for (int k = 0; k < 3; ++k)
      if (m.faces[f][k] == vid) return m.uv[f][k];
    return Vec2(-1.0, -1.0);
  };

  UvPatch p;
  std::vector<std::uint8_t> seen(m.face_count(), 0);
  std::deque<std::size_t> queue{seed};
  seen[seed] = 1;
  while (!queue.empty()) {
    const std::size_t f = queue.front();
    queue.pop_front();
    p.faces.push_back(f);
    for (int k = 0; k < 3; ++k) {
      const int a = m.faces[f][k], b = m.faces[f][(k + 1) % 3];
      for (auto [g, corner] : edges[edge_key(a, b)]) {
        if (seen[g]) continue;
        // A uv seam along the edge separates the faces into different patches.
        if (!same_uv(uv_of(f, a), uv_of(g, a)) || !same_uv(uv_of(f, b), uv_of(g, b))) continue;
        seen[g] = 1;
        queue.push_back(g);
      }
    }
  }
  std::sort(p.faces.begin(), p.faces.end());

  for (std::size_t f : p.faces) {
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      const int vid = m.faces[f][k];
      auto [it, inserted] = p.local.emplace(vid, static_cast<int>(p.vertices.size()));
      if (inserted) {
        p.vertices.push_back(vid);
        p.uv.push_back(m.uv[f][k]);
      } else if (!same_uv(p.uv[it->second], m.uv[f][k])) {
        throw GeometryError("patch of face " + std::to_string(seed) +
                            " is not a disk: a vertex carries two uv positions (cut the seam manually)");
      }
      tri[k] = it->second;
    }
    p.tris.push_back(tri);
    p.area3d.push_back(face_area(m, f));
  }
  p.incident.assign(p.vertices.size(), {});
  for (std::size_t i = 0; i < p.tris.size(); ++i)
    for (int v : p.tris[i]) p.incident[v].push_back(static_cast<int>(i));
  return p;
}

/// Disk topology: manifold edges, Euler characteristic 1 and a single boundary loop.
inline void require_disk(const UvPatch& p, std::size_t seed) {
  std::map<std::pair<int, int>, int> use;
  for (const auto& t : p.tris)
    for (int k = 0; k < 3; ++k) ++use[edge_key(t[k], t[(k + 1) % 3])];
  std::map<int, std::vector<int>> boundary;
  for (const auto& [e, n] : use) {
    if (n > 2) throw GeometryError("patch of face " + std::to_string(seed) + " is non-manifold (cut the seam manually)");
    if (n == 1) {
      boundary[e.first].push_back(e.second);
      boundary[e.second].push_back(e.first);
    }
  }
  const long euler = static_cast<long>(p.vertices.size()) - static_cast<long>(use.size()) + static_cast<long>(p.tris.size());
  bool ok = euler == 1 && !boundary.empty();
  for (const auto& [v, nb] : boundary) ok = ok && nb.size() == 2;
  if (ok) {
    std::set<int> visited;
    std::vector<int> stack{boundary.begin()->first};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (!visited.insert(v).second) continue;
      for (int w : boundary[v]) stack.push_back(w);
    }
    ok = visited.size() == boundary.size();
  }
  if (!ok) {
    throw GeometryError("patch of face " + std::to_string(seed) +
                        " does not have disk topology; cut a seam manually before relaxing");
  }
}

class PatchEnergy {
 public:
  PatchEnergy(const Mesh& m, const UvPatch& p) : p_(p) {
    for (std::size_t f : p.faces) pos_.push_back(face_positions(m, f));
  }

  double face_term(std::size_t i, const std::vector<Vec2>& uv) const {
    const auto& t = p_.tris[i];
    if (!(std::abs(signed_area(uv[t[0]], uv[t[1]], uv[t[2]])) >= kDegenerateArea)) {
      return std::numeric_limits<double>::infinity();
    }
    return distortion_term(p_.area3d[i], triangle_sigmas(pos_[i], {uv[t[0]], uv[t[1]], uv[t[2]]}));
  }

  double total(const std::vector<Vec2>& uv) const {
    double e = 0.0;
    for (std::size_t i = 0; i < p_.tris.size(); ++i) e += face_term(i, uv);
    return e;
  }

  double local(int v, const std::vector<Vec2>& uv) const {
    double e = 0.0;
    for (int i : p_.incident[v]) e += face_term(static_cast<std::size_t>(i), uv);
    return e;
  }

  double signed_uv_area(std::size_t i, const std::vector<Vec2>& uv) const {
    const auto& t = p_.tris[i];
    return signed_area(uv[t[0]], uv[t[1]], uv[t[2]]);
  }

 private:
  const UvPatch& p_;
  std::vector<std::array<Vec3, 3>> pos_;
};

/// +1 / -1 when every uv triangle shares one winding with area above the
/// degeneracy bound, 0 otherwise.
inline int layout_orientation(const UvPatch& p, const PatchEnergy& e, const std::vector<Vec2>& uv) {
  int sign = 0;
  for (std::size_t i = 0; i < p.tris.size(); ++i) {
    const double a = e.signed_uv_area(i, uv);
    const int s = a > kDegenerateArea ? 1 : (a < -kDegenerateArea ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) return 0;
    sign = s;
  }
  return sign;
}

/// Lays the patch flat by breadth-first unfolding from the seed triangle,
/// preserving the 3D edge lengths of every triangle as it is first reached.
inline std::optional<std::vector<Vec2>> unfold(const Mesh& m, const UvPatch& p) {
  const std::size_t n = p.vertices.size();
  std::vector<Vec2> uv(n, Vec2::Zero());
  std::vector<std::uint8_t> placed(n, 0);
  auto pos = [&](int local) -> const Vec3& { return m.vertices[p.vertices[local]]; };

  const auto& s = p.tris[0];
  const double l01 = (pos(s[1]) - pos(s[0])).norm();
  const Vec3 e02 = pos(s[2]) - pos(s[0]);
  const Vec3 dir = (pos(s[1]) - pos(s[0])) / l01;
  uv[s[0]] = Vec2(0, 0);
  uv[s[1]] = Vec2(l01, 0);
  const double along = e02.dot(dir);
  uv[s[2]] = Vec2(along, std::sqrt(std::max(e02.squaredNorm() - along * along, 0.0)));
  placed[s[0]] = placed[s[1]] = placed[s[2]] = 1;

  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (std::size_t i = 0; i < p.tris.size(); ++i)
    for (int k = 0; k < 3; ++k) edge_faces[edge_key(p.tris[i][k], p.tris[i][(k + 1) % 3])].push_back(static_cast<int>(i));

  std::vector<std::uint8_t> done(p.tris.size(), 0);
  std::deque<int> queue{0};
  done[0] = 1;
  while (!queue.empty()) {
    const int fi = queue.front();
    queue.pop_front();
    const auto& t = p.tris[fi];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
      for (int gi : edge_faces[edge_key(a, b)]) {
        if (done[gi]) continue;
        done[gi] = 1;
        queue.push_back(gi);
        int d = -1;
        for (int v : p.tris[gi])
          if (v != a && v != b) d = v;
        if (placed[d]) continue;
        // Intersect circles around a and b, on the side opposite to c.
        const double ab = (uv[b] - uv[a]).norm();
        const double ra = (pos(d) - pos(a)).norm(), rb = (pos(d) - pos(b)).norm();
        const Vec2 ex = (uv[b] - uv[a]) / ab;
        const Vec2 ey(-ex.y(), ex.x());
        const double x = (ra * ra - rb * rb + ab * ab) / (2.0 * ab);
        const double y = std::sqrt(std::max(ra * ra - x * x, 0.0));
        const double side = (uv[c] - uv[a]).dot(ey) >= 0 ? -1.0 : 1.0;
        uv[d] = uv[a] + x * ex + side * y * ey;
        placed[d] = 1;
      }
    }
  }
  for (auto flag : placed)
    if (!flag) return std::nullopt;
  return uv;
}

/// Uniformly shrinks (never enlarges) and centers a layout inside the rectangle.
inline void fit_into(std::vector<Vec2>& uv, const AtlasRect& rect) {
  Vec2 lo = uv.front(), hi = uv.front();
  for (const Vec2& t : uv) {
    lo = lo.cwiseMin(t);
    hi = hi.cwiseMax(t);
  }
  const Vec2 ext = hi - lo;
  double s = 1.0;
  if (ext.x() > rect.width()) s = std::min(s, rect.width() / ext.x());
  if (ext.y() > rect.height()) s = std::min(s, rect.height() / ext.y());
  s *= 1.0 - 1e-9;
  const Vec2 center = 0.5 * (lo + hi);
  const Vec2 target = 0.5 * (rect.min + rect.max);
  for (Vec2& t : uv) {
    t = target + s * (t - center);
    t = t.cwiseMax(rect.min).cwiseMin(rect.max);
  }
}

inline bool inside(const std::vector<Vec2>& uv, const AtlasRect& rect) {
  return std::all_of(uv.begin(), uv.end(), [&](const Vec2& t) { return rect.contains(t); });
}

}  // namespace detail

/// Relaxes the uv layout of the textured patch containing `seed_face`.
///
/// The starting layout is the better (lower energy, fold-free) of the input
/// uv and a breadth-first isometric unfolding from the seed fitted into the
/// patch's atlas rectangle. Each sweep then moves every patch vertex along its
/// negative energy gradient with step halving, accepting only moves that lower
/// the energy, keep every triangle's winding and stay inside the rectangle.
inline RelaxTrace relax_uv_traced(const Mesh& mesh, std::size_t seed_face, const RelaxOptions& opt = {}) {
  detail::UvPatch patch = detail::extract_patch(mesh, seed_face);
  detail::require_disk(patch, seed_face);
  double area3d = 0.0;
  for (double a : patch.area3d) area3d += a;
  if (area3d > opt.rect.area()) {
    throw GeometryError("patch of face " + std::to_string(seed_face) + " (3D area " + std::to_string(area3d) +
                        ") is too large for its atlas rectangle (area " + std::to_string(opt.rect.area()) + ")");
  }

  const detail::PatchEnergy energy(mesh, patch);
  std::vector<Vec2> uv = patch.uv;
  if (!detail::inside(uv, opt.rect)) detail::fit_into(uv, opt.rect);
  int orientation = detail::layout_orientation(patch, energy, uv);
  double current = energy.total(uv);

  RelaxTrace trace;
  if (auto unfolded = detail::unfold(mesh, patch)) {
    detail::fit_into(*unfolded, opt.rect);
    int o = detail::layout_orientation(patch, energy, *unfolded);
    if (o != 0 && orientation != 0 && o != orientation) {
      const double mid = 0.5 * (opt.rect.min.x() + opt.rect.max.x());
      for (Vec2& t : *unfolded) t.x() = 2.0 * mid - t.x();
      o = orientation;
    }
    const double e = energy.total(*unfolded);
    if (o != 0 && (orientation == 0 || e < current)) {
      uv = std::move(*unfolded);
      current = e;
      orientation = o;
      trace.used_unfolding = true;
    }
  }
  trace.energy_history.push_back(current);

  if (orientation != 0) {
    const std::size_t nv = patch.vertices.size();
    std::vector<double> step(nv);
    for (std::size_t v = 0; v < nv; ++v) {
      double shortest = 1e300;
      for (int i : patch.incident[v])
        for (int w : patch.tris[i])
          if (static_cast<std::size_t>(w) != v) shortest = std::min(shortest, (uv[w] - uv[v]).norm());
      step[v] = 0.25 * shortest;
    }
    auto winding_ok = [&](std::size_t v) {
      for (int i : patch.incident[v]) {
        const double a = energy.signed_uv_area(static_cast<std::size_t>(i), uv);
        if (!(orientation * a > kDegenerateArea)) return false;
      }
      return true;
    };

    for (int it = 0; it < opt.iterations; ++it) {
      // Local decreases must beat the rounding of the global sum so the
      // recomputed total never goes up.
      const double margin = 1e-11 * current;
      for (std::size_t v = 0; v < nv; ++v) {
        const Vec2 origin = uv[v];
        const double before = energy.local(static_cast<int>(v), uv);
        const double h = 1e-7 * std::max(step[v], 1e-9);
        Vec2 grad;
        for (int d = 0; d < 2; ++d) {
          uv[v] = origin;
          uv[v][d] += h;
          const double ep = energy.local(static_cast<int>(v), uv);
          uv[v] = origin;
          uv[v][d] -= h;
          const double em = energy.local(static_cast<int>(v), uv);
          grad[d] = (ep - em) / (2.0 * h);
        }
        uv[v] = origin;
        const double gnorm = grad.norm();
        if (!(gnorm > 0.0) || !std::isfinite(gnorm)) continue;
        const Vec2 dir = -grad / gnorm;
        double len = step[v];
        bool accepted = false;
        for (int halving = 0; halving < 16; ++halving) {
          uv[v] = origin + len * dir;
          if (opt.rect.contains(uv[v]) && winding_ok(v) && energy.local(static_cast<int>(v), uv) < before - margin) {
            accepted = true;
            break;
          }
          len *= 0.5;
        }
        if (accepted) {
          step[v] = 2.0 * len;
        } else {
          uv[v] = origin;
          step[v] *= 0.5;
        }
      }
      current = energy.total(uv);
      trace.energy_history.push_back(current);
    }
  }

  trace.mesh = mesh;
  for (std::size_t i = 0; i < patch.faces.size(); ++i)
    for (int k = 0; k < 3; ++k) trace.mesh.uv[patch.faces[i]][k] = uv[patch.tris[i][k]];
  return trace;
}

inline Mesh relax_uv(const Mesh& mesh, std::size_t seed_face, int iterations, const AtlasRect& rect = {}) {
  return relax_uv_traced(mesh, seed_face, RelaxOptions{iterations, rect}).mesh;
}

}  // namespace camo
