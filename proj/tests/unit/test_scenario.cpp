#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "camo/scenario/appearance.hpp"
#include "camo/scenario/catalog.hpp"
#include "camo/scenario/dataset.hpp"
#include "camo/scenario/json_io.hpp"
#include "camo/scenario/manifest.hpp"
#include "camo/scenario/poses.hpp"
#include "support.hpp"

using namespace camo;
using namespace camo::test;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("camo_scenario_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

PoseSamplingConfig small_intrinsics(PoseSamplingConfig c, int size = 32) {
  c.intrinsics.width = size;
  c.intrinsics.height = size;
  return c;
}

PoseSamplingConfig single(double r, std::vector<double> low, std::vector<double> high) {
  PoseSamplingConfig c;
  c.distances = {r};
  c.low_polar_angles = std::move(low);
  c.high_polar_angles = std::move(high);
  return c;
}

FrameRecord sample_record(int i) {
  FrameRecord r;
  char name[32];
  std::snprintf(name, sizeof name, "frames/%05d.png", i);
  r.file = name;
  r.scene_id = i % 3;
  r.pose.r = 8.0 + i;
  r.pose.theta = 5.0 * i;
  r.pose.phi = 18.0 * i + 0.125;
  r.pose.width = 48 + i;
  r.pose.height = 40;
  r.pose.target = Vec3(0.1 * i, 0.6, -0.05 * i);
  if (i % 2 == 0) r.box = Box{1.5 + i, 2.25, 30.0 - i, 31.5};
  for (int k = 0; k < i % 3; ++k) r.objects.push_back({ObjectClass::distractor, Box{0.5 * k, 1.0, 4.0 + k, 9.75}});
  r.ground_enabled = i != 4;
  r.ground_height = 0.01 * i;
  r.appearance = i == 5 ? "blocks" : "clean";
  return r;
}

}  // namespace

TEST(Poses, OnePolarLowStepGivesTwenty) {
  EXPECT_EQ(sample_poses(single(10, {5}, {})).size(), 20u);
}

TEST(Poses, OnePolarHighStepGivesEight) {
  EXPECT_EQ(sample_poses(single(10, {}, {45})).size(), 8u);
}

TEST(Poses, DefaultsMatchCountFormula) {
  const PoseSamplingConfig c;
  const std::size_t oracle = c.distances.size() * (c.low_polar_angles.size() * 20 + c.high_polar_angles.size() * 8);
  EXPECT_EQ(oracle, 352u);
  EXPECT_EQ(sample_poses(c).size(), oracle);
  EXPECT_EQ(expected_pose_count(c), oracle);
}

TEST(Poses, OneDistancePerLocationGives88) {
  PoseSamplingConfig c;
  c.distance_mode = DistanceMode::cycle;
  for (std::size_t s = 0; s < 8; ++s) {
    const auto poses = poses_for_scene(c, s);
    ASSERT_EQ(poses.size(), 88u);
    for (const auto& p : poses) EXPECT_EQ(p.r, c.distances[s % c.distances.size()]);
  }
}

TEST(Poses, CountFormulaAcrossConfigs) {
  for (double low_step : {18.0, 30.0, 90.0})
    for (double high_step : {45.0, 60.0, 120.0})
      for (std::size_t nd = 1; nd <= 3; ++nd) {
        PoseSamplingConfig c;
        c.distances.assign(nd, 0.0);
        for (std::size_t i = 0; i < nd; ++i) c.distances[i] = 5.0 + i;
        c.low_polar_angles = {0, 15};
        c.high_polar_angles = {35, 40, 45};
        c.low_azimuth_step = low_step;
        c.high_azimuth_step = high_step;
        const std::size_t oracle = nd * static_cast<std::size_t>(2 * 360 / low_step + 3 * 360 / high_step);
        EXPECT_EQ(sample_poses(c).size(), oracle);
        EXPECT_EQ(expected_pose_count(c), oracle);
      }
}

TEST(Poses, OrderingDistancePolarAzimuth) {
  PoseSamplingConfig c;
  c.distances = {8, 10};
  c.low_polar_angles = {5, 10};
  c.high_polar_angles = {45};
  const auto poses = sample_poses(c);
  ASSERT_EQ(poses.size(), 2u * (40 + 8));
  std::size_t k = 0;
  for (double r : {8.0, 10.0}) {
    for (double theta : {5.0, 10.0})
      for (int a = 0; a < 20; ++a, ++k) {
        EXPECT_EQ(poses[k].r, r);
        EXPECT_EQ(poses[k].theta, theta);
        EXPECT_DOUBLE_EQ(poses[k].phi, 18.0 * a);
      }
    for (int a = 0; a < 8; ++a, ++k) {
      EXPECT_EQ(poses[k].theta, 45.0);
      EXPECT_DOUBLE_EQ(poses[k].phi, 45.0 * a);
    }
  }
}

TEST(Poses, Deterministic) {
  const PoseSamplingConfig c;
  EXPECT_EQ(sample_poses(c), sample_poses(c));
}

TEST(Poses, NoPoseExceeds45) {
  for (const auto& p : sample_poses(PoseSamplingConfig{})) EXPECT_LE(p.theta, kMaxPolarAngle);
}

TEST(Poses, SteepPolarRejectedWithReason) {
  try {
    sample_poses(single(10, {5}, {50}));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("45"), std::string::npos);
    EXPECT_NE(what.find("accuracy drops rapidly"), std::string::npos);
  }
  EXPECT_THROW(sample_poses(single(10, {60}, {})), Error);
}

TEST(Poses, InvalidConfigRejected) {
  EXPECT_THROW(sample_poses(single(10, {35}, {})), Error);
  EXPECT_THROW(sample_poses(single(10, {}, {30})), Error);
  EXPECT_THROW(sample_poses(single(-1, {5}, {})), Error);
  auto c = single(10, {5}, {});
  c.low_azimuth_step = 25;
  EXPECT_THROW(sample_poses(c), Error);
  c.low_azimuth_step = 0;
  EXPECT_THROW(sample_poses(c), Error);
}

TEST(Poses, IntrinsicsCarried) {
  auto c = small_intrinsics(single(9, {10}, {}), 40);
  for (const auto& p : sample_poses(c)) {
    EXPECT_EQ(p.width, 40);
    EXPECT_EQ(p.r, 9.0);
  }
}

TEST(Catalog, MinimalIsDisjoint) {
  const auto c = build_scene_catalog(1, 1, 7);
  ASSERT_EQ(c.scenes.size(), 2u);
  EXPECT_EQ(c.train_ids(), std::vector<int>{0});
  EXPECT_EQ(c.test_ids(), std::vector<int>{1});
}

TEST(Catalog, SameSeedIdentical) {
  EXPECT_EQ(to_json(build_scene_catalog(9, 1, 42)).dump(), to_json(build_scene_catalog(9, 1, 42)).dump());
  EXPECT_NE(to_json(build_scene_catalog(9, 1, 42)).dump(), to_json(build_scene_catalog(9, 1, 43)).dump());
}

TEST(Catalog, DefaultsWithinRanges) {
  const SceneRanges r;
  const auto c = build_scene_catalog(9, 1, 3);
  ASSERT_EQ(c.scenes.size(), 10u);
  std::set<int> train, test;
  for (const auto& s : c.scenes) (s.test ? test : train).insert(s.id);
  EXPECT_EQ(train.size(), 9u);
  EXPECT_EQ(test.size(), 1u);
  for (int id : test) EXPECT_EQ(train.count(id), 0u);
  for (const auto& cs : c.scenes) {
    const SceneConfig& s = cs.scene;
    for (int ch = 0; ch < 3; ++ch) {
      EXPECT_GE(s.ambient[ch], r.ambient_min);
      EXPECT_LE(s.ambient[ch], r.ambient_max);
    }
    ASSERT_EQ(s.directional_lights.size(), 1u);
    EXPECT_TRUE(s.point_lights.empty());
    const auto& sun = s.directional_lights[0];
    const double elev = rad2deg(std::asin(sun.direction.normalized().y()));
    EXPECT_GE(elev, r.sun_elevation_min - 1e-9);
    EXPECT_LE(elev, r.sun_elevation_max + 1e-9);
    EXPECT_GE(sun.intensity.maxCoeff(), r.sun_intensity_min);
    EXPECT_LE(sun.intensity.maxCoeff(), r.sun_intensity_max);
    EXPECT_GE(s.ground.albedo.y(), r.ground_min);
    EXPECT_LE(s.ground.albedo.y(), r.ground_max);
    EXPECT_GE(s.background.z(), r.sky_min);
    EXPECT_LE(s.background.z(), r.sky_max);
    EXPECT_GE(static_cast<int>(s.distractors.size()), r.distractors_min);
    EXPECT_LE(static_cast<int>(s.distractors.size()), r.distractors_max);
    for (const auto& d : s.distractors) {
      const double rad = std::hypot(d.center.x(), d.center.z());
      EXPECT_GE(rad, r.distractor_radius_min - 1e-9);
      EXPECT_LE(rad, r.distractor_radius_max + 1e-9);
      EXPECT_GE(d.size.minCoeff(), r.distractor_size_min);
      EXPECT_LE(d.size.maxCoeff(), r.distractor_size_max);
    }
  }
}

TEST(Catalog, InvalidCounts) {
  EXPECT_THROW(build_scene_catalog(0, 1, 1), Error);
  EXPECT_THROW(build_scene_catalog(1, 0, 1), Error);
}

TEST(Catalog, JsonRoundTrip) {
  const auto c = build_scene_catalog(3, 2, 11);
  EXPECT_EQ(to_json(catalog_from_json(to_json(c))).dump(), to_json(c).dump());
}

TEST(Manifest, EmptyRoundTrip) {
  const auto dir = scratch_dir("empty_manifest");
  std::filesystem::create_directories(dir);
  write_manifest({}, dir / kManifestName);
  EXPECT_TRUE(read_manifest(dir / kManifestName).empty());
}

TEST(Manifest, SixRecordsRoundTrip) {
  Manifest m;
  for (int i = 0; i < 6; ++i) m.push_back(sample_record(i));
  const auto dir = scratch_dir("six_manifest");
  std::filesystem::create_directories(dir);
  write_manifest(m, dir / kManifestName);
  const Manifest back = read_manifest(dir / kManifestName);
  ASSERT_EQ(back.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(back[i], m[i]) << "record " << i;
}

TEST(Manifest, CorruptedLineReported) {
  Manifest m;
  for (int i = 0; i < 4; ++i) m.push_back(sample_record(i));
  std::ostringstream out;
  for (const auto& r : m) out << to_json(r).dump() << '\n';
  std::string text = out.str();
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  lines[2] = lines[2].substr(0, lines[2].size() / 2);
  std::string corrupted;
  for (const auto& l : lines) corrupted += l + "\n";
  std::istringstream bad(corrupted);
  try {
    parse_manifest(bad, "m.jsonl");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("m.jsonl:3"), std::string::npos);
  }
}

TEST(Manifest, MissingFieldReported) {
  Json j = to_json(sample_record(1));
  j.erase("pose");
  std::istringstream in(to_json(sample_record(0)).dump() + "\n" + j.dump() + "\n");
  try {
    parse_manifest(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Manifest, MissingFileIsIoError) {
  EXPECT_THROW(read_manifest(scratch_dir("absent") / kManifestName), IoError);
}

TEST(Prerender, EmptyScenario) {
  const Mesh m = fixtures::car();
  const auto t = random_texture(m, 32, 32, 1);
  const auto dir = scratch_dir("empty");
  EXPECT_TRUE(prerender_dataset(m, t, {}, dir).empty());
  EXPECT_TRUE(read_manifest(dir / kManifestName).empty());
}

TEST(Prerender, TwoScenesThreePoses) {
  const Mesh m = fixtures::car();
  const auto t = random_texture(m, 32, 32, 2);
  const auto catalog = build_scene_catalog(2, 1, 5);
  PoseSamplingConfig pc = small_intrinsics(single(10, {}, {}));
  pc.low_polar_angles = {10};
  pc.low_azimuth_step = 120;
  const auto items = build_scenario(catalog, pc, false);
  ASSERT_EQ(items.size(), 6u);
  const auto dir = scratch_dir("six");
  const Manifest man = prerender_dataset(m, t, items, dir);
  ASSERT_EQ(man.size(), 6u);
  EXPECT_EQ(read_manifest(dir / kManifestName), man);
  for (std::size_t i = 0; i < man.size(); ++i) {
    EXPECT_EQ(man[i].scene_id, items[i].scene_id);
    EXPECT_EQ(man[i].pose, items[i].pose);
    ASSERT_TRUE(man[i].box.has_value());
    const Image img = load_frame(dir, man[i]);
    EXPECT_EQ(img.width, 32);
    const ReferenceFrame f = render_ref(m, t, items[i].pose, items[i].scene, items[i].scene_id);
    EXPECT_EQ(man[i].box, f.box);
  }
}

TEST(Prerender, RerunByteIdentical) {
  const Mesh m = fixtures::car();
  const auto t = random_texture(m, 32, 32, 3);
  const auto catalog = build_scene_catalog(1, 1, 9);
  PoseSamplingConfig pc = small_intrinsics(single(10, {}, {45}));
  pc.high_azimuth_step = 90;
  const auto items = build_scenario(catalog, pc, true);
  ASSERT_EQ(items.size(), 4u);
  const auto a = scratch_dir("rerun_a"), b = scratch_dir("rerun_b");
  prerender_dataset(m, t, items, a, {true, 4});
  prerender_dataset(m, t, items, b, {true, 4});
  EXPECT_EQ(slurp(a / kManifestName), slurp(b / kManifestName));
  for (const auto& e : std::filesystem::directory_iterator(a / "frames"))
    EXPECT_EQ(slurp(e.path()), slurp(b / "frames" / e.path().filename())) << e.path();
}

TEST(Prerender, DeskLocationHas88Frames) {
  const Mesh m = fixtures::car();
  const auto t = random_texture(m, 32, 32, 4);
  const auto catalog = build_scene_catalog(1, 1, 1);
  PoseSamplingConfig pc = small_intrinsics(PoseSamplingConfig{}, 16);
  pc.distance_mode = DistanceMode::cycle;
  const auto items = build_scenario(catalog, pc, true);
  const auto dir = scratch_dir("desk88");
  const Manifest man = prerender_dataset(m, t, items, dir);
  std::map<int, int> per_scene;
  for (const auto& r : man) ++per_scene[r.scene_id];
  ASSERT_EQ(per_scene.size(), 1u);
  EXPECT_EQ(per_scene.begin()->second, 88);
}

TEST(Prerender, UnwritableDirectoryNamesPath) {
  const auto blocker = scratch_dir("blocker");
  std::ofstream(blocker) << "x";
  const Mesh m = fixtures::car();
  try {
    prerender_dataset(m, random_texture(m, 16, 16, 1), {}, blocker / "sub");
    FAIL() << "expected an IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(blocker.string()), std::string::npos);
  }
}

TEST(Appearance, PaintDeterministicAndMasked) {
  const Mesh m = fixtures::car();
  const auto base = random_texture(m, 32, 32, 5);
  const AppearanceConfig cfg{true, 17};
  std::set<std::string> kinds;
  for (std::uint64_t f = 0; f < 24; ++f) {
    const FramePaint a = paint_for_frame(base, cfg, f), b = paint_for_frame(base, cfg, f);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.texture.image.data, b.texture.image.data);
    kinds.insert(to_string(a.kind));
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (!base.textured(x, y)) EXPECT_EQ(a.texture.image.rgb(x, y), base.image.rgb(x, y));
  }
  EXPECT_EQ(kinds.size(), 3u);
  EXPECT_EQ(paint_for_frame(base, {}, 3).kind, Appearance::clean);
  EXPECT_EQ(appearance_from_string("blocks"), Appearance::blocks);
  EXPECT_THROW(appearance_from_string("chrome"), Error);
}
