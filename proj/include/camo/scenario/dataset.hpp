#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/core/png_io.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/reference.hpp"
#include "camo/scenario/appearance.hpp"
#include "camo/scenario/catalog.hpp"
#include "camo/scenario/manifest.hpp"
#include "camo/scenario/poses.hpp"

namespace camo {

/// One (pose, scene) pair to render.
struct ScenarioItem {
  CameraPose pose;
  int scene_id = 0;
  SceneConfig scene;
};

/// Scene-major list of every pose for the train or test scenes of a catalog.
inline std::vector<ScenarioItem> build_scenario(const SceneCatalog& catalog, const PoseSamplingConfig& poses, bool test) {
  std::vector<ScenarioItem> items;
  for (const auto& s : catalog.scenes) {
    if (s.test != test) continue;
    for (const auto& p : poses_for_scene(poses, static_cast<std::size_t>(s.id))) items.push_back({p, s.id, s.scene});
  }
  return items;
}

inline constexpr const char* kManifestName = "manifest.jsonl";

inline FrameRecord record_for(const ReferenceFrame& f, const std::string& file, const SceneConfig& scene,
                              Appearance appearance = Appearance::clean) {
  return {file, f.scene_id, f.pose, f.box, f.objects, scene.ground.enabled, scene.ground.height, to_string(appearance)};
}

/// Renders every item once with render_ref, writes frames/NNNNN.png and
/// manifest.jsonl under out_dir, and returns the manifest.
inline Manifest prerender_dataset(const Mesh& mesh, const TextureMap& texture, const std::vector<ScenarioItem>& items,
                                  const std::filesystem::path& out_dir, const AppearanceConfig& appearance = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "frames", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "frames").string() + ": " + ec.message());
  Manifest manifest;
  manifest.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ScenarioItem& it = items[i];
    const FramePaint paint = paint_for_frame(texture, appearance, i);
    const ReferenceFrame f = render_ref(mesh, paint.texture, it.pose, it.scene, it.scene_id);
    char name[32];
    std::snprintf(name, sizeof name, "frames/%05zu.png", i);
    png::write_rgb(out_dir / name, f.image);
    manifest.push_back(record_for(f, name, it.scene, paint.kind));
  }
  write_manifest(manifest, out_dir / kManifestName);
  return manifest;
}

inline Image load_frame(const std::filesystem::path& dataset_dir, const FrameRecord& r) {
  return png::read_rgb(dataset_dir / r.file);
}

}  // namespace camo
