#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "camo/geometry/mesh.hpp"

namespace camo {

/// Möller-Trumbore intersection; returns the hit distance or a negative value.
inline double intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return -1.0;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(q) * inv;
}

/// Median-split bounding volume hierarchy answering occlusion queries.
class Bvh {
 public:
  explicit Bvh(const Mesh& mesh) : mesh_(&mesh), order_(mesh.face_count()) {
    std::iota(order_.begin(), order_.end(), 0);
    centroids_.reserve(mesh.face_count());
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
      const Face& t = mesh.faces[f];
      centroids_.push_back((mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0);
    }
    if (!order_.empty()) build(0, static_cast<int>(order_.size()));
  }

  /// True when any triangle is hit at a distance in (t_min, t_max).
  bool occluded(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const {
    if (nodes_.empty()) return false;
    const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (!slab(n, origin, inv, t_min, t_max)) continue;
      if (n.count > 0) {
        for (int i = n.start; i < n.start + n.count; ++i) {
          const Face& t = mesh_->faces[order_[i]];
          const double d = intersect_triangle(origin, dir, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                              mesh_->vertices[t[2]]);
          if (d > t_min && d < t_max) return true;
        }
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    return false;
  }

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1, start = 0, count = 0;
  };

  static bool slab(const Node& n, const Vec3& o, const Vec3& inv, double t0, double t1) {
    for (int a = 0; a < 3; ++a) {
      double ta = (n.lo[a] - o[a]) * inv[a], tb = (n.hi[a] - o[a]) * inv[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    return true;
  }

  int build(int start, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300), clo = lo, chi = hi;
    for (int i = start; i < end; ++i) {
      const Face& t = mesh_->faces[order_[i]];
      for (int k = 0; k < 3; ++k) {
        lo = lo.cwiseMin(mesh_->vertices[t[k]]);
        hi = hi.cwiseMax(mesh_->vertices[t[k]]);
      }
      clo = clo.cwiseMin(centroids_[order_[i]]);
      chi = chi.cwiseMax(centroids_[order_[i]]);
    }
    const Vec3 pad = Vec3::Constant(1e-9);
    nodes_[id].lo = lo - pad;
    nodes_[id].hi = hi + pad;
    if (end - start <= 4) {
      nodes_[id].start = start;
      nodes_[id].count = end - start;
      return id;
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const int mid = (start + end) / 2;
    std::nth_element(order_.begin() + start, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
      if (centroids_[a][axis] != centroids_[b][axis]) return centroids_[a][axis] < centroids_[b][axis];
      return a < b;
    });
    const int left = build(start, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const Mesh* mesh_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

}  // namespace camo
