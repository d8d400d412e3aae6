#include <cmath>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "camo/render/camera.hpp"
#include "camo/render/diff_render.hpp"
#include "camo/render/raster.hpp"
#include "camo/render/reference.hpp"
#include "support.hpp"

using namespace camo;
using namespace camo::test;

namespace {

/// Albedo * (ambient + sum of clamped cosines) recomputed from the tape's face and barycentrics.
Rgb oracle_pixel(const Mesh& m, const TextureMap& tex, const SceneConfig& s, const Vec3& eye, const PixelRecord& rec) {
  const Face& f = m.faces[rec.face];
  const Vec3 a = m.vertices[f[0]], b = m.vertices[f[1]], c = m.vertices[f[2]];
  const Vec3 p = rec.bary[0] * a + rec.bary[1] * b + rec.bary[2] * c;
  Vec3 n = (b - a).cross(c - a).normalized();
  if (n.dot(eye - p) < 0) n = -n;
  Rgb irradiance = s.ambient;
  for (const auto& l : s.directional_lights) irradiance += std::max(0.0, n.dot(l.direction.normalized())) * l.intensity;
  for (const auto& l : s.point_lights) irradiance += std::max(0.0, n.dot((l.position - p).normalized())) * l.intensity;
  Rgb albedo = m.materials[m.material_of_face[rec.face]].albedo;
  if (m.is_textured(rec.face) && rec.footprint.count > 0) {
    albedo.setZero();
    for (int k = 0; k < rec.footprint.count; ++k) {
      const int t = rec.footprint.texel[k];
      albedo += rec.footprint.weight[k] * tex.image.rgb(t % tex.width(), t / tex.width());
    }
  }
  Rgb out = albedo.cwiseProduct(irradiance);
  for (int k = 0; k < 3; ++k) out[k] = std::clamp(out[k], 0.0, 1.0);
  return out;
}

Mesh ground_triangle() {
  Mesh m;
  m.add_vertex(Vec3(-1e3, 0, -1e3));
  m.add_vertex(Vec3(3e3, 0, -1e3));
  m.add_vertex(Vec3(-1e3, 0, 3e3));
  m.add_face({0, 1, 2}, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, false, 0);
  return m;
}

std::size_t largest_component(const Mask& m) {
  Mask seen(m.width, m.height, 0);
  std::size_t best = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m(x, y) || seen(x, y)) continue;
      std::size_t n = 0;
      std::queue<std::pair<int, int>> q;
      q.push({x, y});
      seen(x, y) = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        ++n;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (m.contains(nx, ny) && m(nx, ny) && !seen(nx, ny)) {
            seen(nx, ny) = 1;
            q.push({nx, ny});
          }
        }
      }
      best = std::max(best, n);
    }
  return best;
}

}  // namespace

TEST(Camera, OverheadPoleLooksDownWithUpAlongMinusX) {
  CameraPose p;
  p.theta = 0.0;
  p.phi = 0.0;
  const ViewTransform v = camera_from_spherical(p);
  EXPECT_TRUE(v.eye.isApprox(p.target + Vec3(0, p.r, 0), 1e-12));
  EXPECT_TRUE(v.forward.isApprox(Vec3(0, -1, 0), 1e-12));
  EXPECT_TRUE(v.up.isApprox(Vec3(-1, 0, 0), 1e-12));
  const ScreenPoint above = v.project(p.target + Vec3(-0.5, 0, 0));
  EXPECT_LT(above.y, p.height / 2.0);
  EXPECT_NEAR(above.x, p.width / 2.0, 1e-9);
}

TEST(Camera, AzimuthIsPeriodic) {
  for (double phi : {0.0, 30.0, 125.5, 359.0}) {
    CameraPose a, b;
    a.phi = phi;
    b.phi = phi + 360.0;
    const ViewTransform va = camera_from_spherical(a), vb = camera_from_spherical(b);
    EXPECT_TRUE(va.view.isApprox(vb.view, 1e-12));
    EXPECT_TRUE(va.projection.isApprox(vb.projection, 1e-12));
  }
}

TEST(Camera, InverseViewRecoversSphericalPosition) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    CameraPose p;
    p.r = 1 + 20 * u(rng);
    p.theta = 90 * u(rng);
    p.phi = 360 * u(rng);
    p.target = Vec3(u(rng), u(rng), u(rng));
    const ViewTransform v = camera_from_spherical(p);
    const Vec3 eye = v.view.inverse().col(3).head<3>();
    const double t = p.theta * kPi / 180, f = p.phi * kPi / 180;
    const Vec3 expect = p.target + p.r * Vec3(std::sin(t) * std::cos(f), std::cos(t), std::sin(t) * std::sin(f));
    EXPECT_NEAR((eye - expect).norm(), 0.0, 1e-9);
    const ScreenPoint c = v.project(p.target);
    EXPECT_NEAR(c.x, p.width / 2.0, 1e-9);
    EXPECT_NEAR(c.y, p.height / 2.0, 1e-9);
  }
}

TEST(Camera, InvalidPoseIsRejected) {
  CameraPose p;
  p.theta = 95;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.r = 0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.width = 8;
  EXPECT_THROW(validate(p), Error);
}

TEST(RenderDiff, UniformGrayUnderUnitAmbient) {
  const Mesh m = fixtures::car();
  const TextureMap t = make_texture(bake_texel_mask(m, 128, 128), Rgb(0.5, 0.5, 0.5));
  auto [img, tape] = render_diff(m, t, car_pose(60, 40, 96), dark_light_scene(1.0));
  std::size_t covered = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const PixelRecord& r = tape.pixels[y * img.width + x];
      if (r.face == kBackground || !m.is_textured(r.face)) continue;
      ++covered;
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.at(x, y, c), 0.5, 1.0 / 255);
    }
  EXPECT_GT(covered, 100u);
}

TEST(RenderDiff, PixelsScaleLinearlyWithAmbient) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 128, 128, 4);
  const CameraPose p = car_pose(45, 200, 96);
  auto [a, ta] = render_diff(m, t, p, dark_light_scene(0.3));
  auto [b, tb] = render_diff(m, t, p, dark_light_scene(0.6));
  for (std::size_t i = 0; i < ta.pixels.size(); ++i) {
    if (ta.pixels[i].face == kBackground) continue;
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(b.data[i * 3 + c], 2 * a.data[i * 3 + c], 1e-12);
  }
}

TEST(RenderDiff, MatchesPerPixelShadingOracle) {
  const SceneConfig s = lit_scene();
  for (const auto& [m, pose] : {std::pair{fixtures::car(), car_pose(50, 130, 96)},
                                std::pair{fixtures::hemisphere(), close_pose(40, 10, 64)},
                                std::pair{fixtures::door_panel(), close_pose(70, 290, 64)}}) {
    const TextureMap t = random_texture(m, 64, 64, 5);
    auto [img, tape] = render_diff(m, t, pose, s);
    const Vec3 eye = spherical_position(pose);
    std::size_t covered = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const PixelRecord& r = tape.pixels[y * img.width + x];
        if (r.face == kBackground) {
          EXPECT_EQ(img.rgb(x, y), s.background);
          continue;
        }
        ++covered;
        EXPECT_TRUE(img.rgb(x, y).isApprox(oracle_pixel(m, t, s, eye, r), 1e-9)) << x << "," << y;
      }
    EXPECT_GT(covered, 50u);
  }
}

TEST(RenderDiff, TapeFootprintsAreNormalizedAndTextured) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 6);
  auto [img, tape] = render_diff(m, t, car_pose(30, 75, 96), lit_scene());
  for (const PixelRecord& r : tape.pixels) {
    if (r.face == kBackground || r.footprint.count == 0) continue;
    double sum = 0;
    for (int k = 0; k < r.footprint.count; ++k) {
      EXPECT_GE(r.footprint.weight[k], 0.0);
      sum += r.footprint.weight[k];
      ASSERT_GE(r.footprint.texel[k], 0);
      ASSERT_LT(r.footprint.texel[k], 64 * 64);
      EXPECT_TRUE(t.texel_mask.cells[r.footprint.texel[k]]);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(RenderDiff, MismatchedTextureIsRejected) {
  const Mesh m = fixtures::car();
  TextureMap t = random_texture(m, 64, 64, 1);
  t.texel_mask = Mask(32, 32, 1);
  EXPECT_THROW(render_diff(m, t, car_pose(30, 0), lit_scene()), ShapeError);
  const TextureMap tiny = make_texture(Mask(4, 4, 1), Rgb(0.5, 0.5, 0.5));
  EXPECT_THROW(render_diff(m, tiny, car_pose(30, 0), lit_scene()), ShapeError);
}

TEST(RenderDiff, IsDeterministic) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 7);
  auto [a, ta] = render_diff(m, t, car_pose(35, 15, 80), lit_scene());
  auto [b, tb] = render_diff(m, t, car_pose(35, 15, 80), lit_scene());
  EXPECT_EQ(a.data, b.data);
  const Image cot = random_image(80, 80, 3);
  EXPECT_EQ(render_diff_vjp(ta, cot).data, render_diff_vjp(tb, cot).data);
}

TEST(RenderDiffVjp, ZeroCotangentGivesZeroGradient) {
  const Mesh m = fixtures::car();
  auto [img, tape] = render_diff(m, random_texture(m, 64, 64, 8), car_pose(30, 90), lit_scene());
  const Image g = render_diff_vjp(tape, Image(img.width, img.height, 0.0));
  for (double v : g.data) EXPECT_EQ(v, 0.0);
}

TEST(RenderDiffVjp, IsLinearInTheCotangent) {
  const Mesh m = fixtures::car();
  auto [img, tape] = render_diff(m, random_texture(m, 64, 64, 9), car_pose(30, 90), lit_scene());
  const Image a = random_image(img.width, img.height, 1), b = random_image(img.width, img.height, 2);
  Image ab = a;
  for (std::size_t i = 0; i < ab.data.size(); ++i) ab.data[i] += b.data[i];
  const Image ga = render_diff_vjp(tape, a), gb = render_diff_vjp(tape, b), gab = render_diff_vjp(tape, ab);
  for (std::size_t i = 0; i < gab.data.size(); ++i) EXPECT_NEAR(gab.data[i], ga.data[i] + gb.data[i], 1e-10);
}

TEST(RenderDiffVjp, ShapeMismatchIsRejected) {
  const Mesh m = fixtures::car();
  auto [img, tape] = render_diff(m, random_texture(m, 64, 64, 9), car_pose(30, 90), lit_scene());
  EXPECT_THROW(render_diff_vjp(tape, Image(10, 10)), ShapeError);
}

TEST(RenderDiffVjp, DirectionalDerivativeMatchesFiniteDifferences) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 10);
  const CameraPose p = car_pose(40, 60, 64);
  const SceneConfig s = lit_scene();
  auto [img, tape] = render_diff(m, t, p, s);
  const Image cot = random_image(64, 64, 11);
  const Image grad = render_diff_vjp(tape, cot);
  const Image dir = random_image(64, 64, 12);
  const double h = 1e-3;
  TextureMap plus = t, minus = t;
  double analytic = 0.0;
  for (std::size_t i = 0; i < dir.data.size(); ++i) {
    if (!t.texel_mask.cells[i / 3]) continue;
    plus.image.data[i] += h * dir.data[i];
    minus.image.data[i] -= h * dir.data[i];
    analytic += grad.data[i] * dir.data[i];
  }
  const double fd = (dot(cot, render_diff(m, plus, p, s).first) - dot(cot, render_diff(m, minus, p, s).first)) / (2 * h);
  ASSERT_GT(std::abs(analytic), 1e-6);
  EXPECT_LT(std::abs(fd - analytic) / std::abs(analytic), 1e-2);
}

TEST(RenderDiffVjp, MatchesFiniteDifferencesOnRandomTexels) {
  const SceneConfig s = lit_scene();
  for (const auto& [m, pose] : {std::pair{fixtures::car(), car_pose(50, 30, 64, 7.0)},
                                std::pair{fixtures::hemisphere(), close_pose(30, 45, 64)},
                                std::pair{fixtures::door_panel(), close_pose(60, 90, 64)}}) {
    const TextureMap t = random_texture(m, 32, 32, 13);
    auto [img, tape] = render_diff(m, t, pose, s);
    const Image cot = random_image(64, 64, 14);
    const Image grad = render_diff_vjp(tape, cot);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < grad.data.size(); ++i)
      if (t.texel_mask.cells[i / 3]) candidates.push_back(i);
    std::shuffle(candidates.begin(), candidates.end(), std::mt19937_64(15));
    candidates.resize(std::min<std::size_t>(candidates.size(), 100));
    ASSERT_EQ(candidates.size(), 100u);
    std::size_t nonzero = 0;
    for (std::size_t i : candidates) {
      TextureMap plus = t, minus = t;
      plus.image.data[i] += 1e-3;
      minus.image.data[i] -= 1e-3;
      const double fd = (dot(cot, render_diff(m, plus, pose, s).first) - dot(cot, render_diff(m, minus, pose, s).first)) / 2e-3;
      EXPECT_NEAR(grad.data[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << i;
      nonzero += grad.data[i] != 0.0;
    }
    EXPECT_GT(nonzero, 0u);
  }
}

TEST(RenderDiffVjp, BackgroundAndUntexturedTexelsGetNoGradient) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 16);
  auto [img, tape] = render_diff(m, t, car_pose(30, 120, 96), lit_scene());
  Image bg(img.width, img.height, 0.0);
  for (std::size_t i = 0; i < tape.pixels.size(); ++i)
    if (tape.pixels[i].face == kBackground)
      for (int c = 0; c < 3; ++c) bg.data[i * 3 + c] = 1.0;
  for (double v : render_diff_vjp(tape, bg).data) EXPECT_EQ(v, 0.0);
  const Image g = render_diff_vjp(tape, random_image(img.width, img.height, 1));
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (!t.texel_mask.cells[i / 3]) EXPECT_EQ(g.data[i], 0.0);
}

TEST(FaceIds, EmptyMeshIsAllBackground) {
  const FaceIdBuffer ids = render_face_ids(Mesh{}, CameraPose{});
  for (auto v : ids.cells) EXPECT_EQ(v, kBackground);
}

TEST(FaceIds, SingleLargeTriangleFillsTheView) {
  CameraPose p;
  p.theta = 0;
  p.r = 5;
  p.target = Vec3(0, 0, 0);
  const FaceIdBuffer ids = render_face_ids(ground_triangle(), p);
  for (auto v : ids.cells) EXPECT_EQ(v, 0);
}

TEST(FaceIds, AgreeWithTheDifferentiableZBuffer) {
  const Mesh m = fixtures::car();
  for (double phi : {0.0, 95.0, 222.0}) {
    const CameraPose p = car_pose(55, phi, 96);
    auto [img, tape] = render_diff(m, random_texture(m, 64, 64, 1), p, lit_scene());
    const FaceIdBuffer ids = render_face_ids(m, p);
    for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids.cells[i], tape.pixels[i].face);
  }
}

TEST(RenderRef, SilhouetteAndBoxMatchFaceIds) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 2);
  SceneConfig s = lit_scene();
  for (double theta : {10.0, 45.0, 80.0})
    for (double phi : {0.0, 130.0, 260.0}) {
      const CameraPose p = car_pose(theta, phi, 96);
      const ReferenceFrame f = render_ref(m, t, p, s);
      const FaceIdBuffer ids = render_face_ids(m, p);
      int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
      for (int y = 0; y < ids.height; ++y)
        for (int x = 0; x < ids.width; ++x) {
          const bool hit = ids(x, y) != kBackground;
          EXPECT_EQ(f.vehicle_mask(x, y) != 0, hit);
          if (hit) {
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
          }
        }
      ASSERT_TRUE(f.box.has_value());
      EXPECT_EQ(*f.box, (Box{double(x0), double(y0), double(x1 + 1), double(y1 + 1)}));
      EXPECT_GE(f.box->x0, 0);
      EXPECT_LE(f.box->x1, p.width);
      EXPECT_GE(f.box->y0, 0);
      EXPECT_LE(f.box->y1, p.height);
    }
}

TEST(RenderRef, NoVehicleInViewGivesNoBox) {
  CameraPose p = car_pose(45, 0, 64);
  p.target = Vec3(500, 0, 0);
  const Mesh m = fixtures::car();
  EXPECT_FALSE(render_ref(m, random_texture(m, 64, 64, 1), p, lit_scene()).box.has_value());
}

TEST(RenderRef, DarkLightMatchesDifferentiableAmbientShading) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 3);
  const SceneConfig s = dark_light_scene(0.8);
  for (double phi : {20.0, 160.0, 300.0}) {
    const CameraPose p = car_pose(40, phi, 96);
    const ReferenceFrame f = render_ref(m, t, p, s);
    const Image d = render_diff(m, t, p, s).first;
    for (std::size_t i = 0; i < d.data.size(); ++i) EXPECT_NEAR(f.image.data[i], d.data[i], 1.0 / 255);
  }
}

TEST(RenderRef, DirectionalLightCastsAContiguousGroundShadow) {
  const Mesh m = fixtures::car();
  SceneConfig s;
  s.ambient = Rgb(0.3, 0.3, 0.3);
  s.directional_lights.push_back({Vec3(0.4, 1.0, 0.3).normalized(), Rgb(0.7, 0.7, 0.7)});
  const CameraPose p = car_pose(45, 210, 128);
  const ReferenceFrame f = render_ref(m, random_texture(m, 64, 64, 4), p, s);
  const double shadowed = s.ground.albedo[0] * s.ambient[0];
  const double lit = s.ground.albedo[0] * (s.ambient[0] + s.directional_lights[0].direction.y() * 0.7);
  Mask shadow(p.width, p.height, 0);
  std::size_t n_lit = 0;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      if (f.vehicle_mask(x, y) || f.image.rgb(x, y) == s.background) continue;
      if (std::abs(f.image.at(x, y, 0) - shadowed) < 1e-9) shadow(x, y) = 1;
      if (std::abs(f.image.at(x, y, 0) - lit) < 1e-9) ++n_lit;
    }
  EXPECT_GT(n_lit, 100u);
  EXPECT_GE(largest_component(shadow), 50u);
  EXPECT_LT(shadowed, lit);
}

TEST(RenderRef, AddingALightNeverDarkens) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 5);
  SceneConfig a;
  a.ambient = Rgb(0.2, 0.2, 0.2);
  a.directional_lights.push_back({Vec3(0.1, 1.0, -0.4).normalized(), Rgb(0.3, 0.3, 0.3)});
  SceneConfig b = a;
  b.point_lights.push_back({Vec3(-3, 3, 3), Rgb(0.3, 0.2, 0.1)});
  SceneConfig c = a;
  c.directional_lights.push_back({Vec3(1.0, 0.5, 0.0).normalized(), Rgb(0.2, 0.2, 0.2)});
  for (double phi : {0.0, 120.0, 240.0}) {
    const CameraPose p = car_pose(50, phi, 96);
    const Image base = render_ref(m, t, p, a).image;
    for (const SceneConfig& more : {b, c}) {
      const Image brighter = render_ref(m, t, p, more).image;
      for (std::size_t i = 0; i < base.data.size(); ++i) EXPECT_GE(brighter.data[i], base.data[i]);
    }
  }
}

TEST(RenderRef, IsDeterministic) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 6);
  SceneConfig s = lit_scene();
  s.distractors.push_back({});
  const ReferenceFrame a = render_ref(m, t, car_pose(60, 10, 96), s, 3);
  const ReferenceFrame b = render_ref(m, t, car_pose(60, 10, 96), s, 3);
  EXPECT_EQ(a.image.data, b.image.data);
  EXPECT_EQ(a.box, b.box);
  EXPECT_EQ(a.scene_id, 3);
}

TEST(RenderRef, VisibleDistractorIsLabeled) {
  const Mesh m = fixtures::car();
  SceneConfig s = lit_scene();
  s.distractors.push_back({Vec3(0, 0, 3.5), Vec3(0.8, 0.8, 0.8), Rgb(0.3, 0.5, 0.3)});
  const ReferenceFrame f = render_ref(m, random_texture(m, 64, 64, 7), car_pose(50, 90, 96), s);
  ASSERT_EQ(f.objects.size(), 1u);
  EXPECT_EQ(f.objects[0].label, ObjectClass::distractor);
}
