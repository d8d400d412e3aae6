#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "camo/attack/optimize.hpp"
#include "camo/cli/config.hpp"
#include "camo/core/error.hpp"
#include "camo/core/png_io.hpp"
#include "camo/eval/metrics.hpp"
#include "camo/eval/report.hpp"
#include "camo/eval/turntable.hpp"
#include "camo/geometry/distortion.hpp"
#include "camo/geometry/fixtures.hpp"
#include "camo/geometry/obj_io.hpp"
#include "camo/geometry/relax.hpp"
#include "camo/geometry/texel_mask.hpp"
#include "camo/scenario/appearance.hpp"
#include "camo/scenario/catalog.hpp"
#include "camo/scenario/dataset.hpp"
#include "camo/victim/train.hpp"
#include "camo/victim/weights_io.hpp"

namespace camo {

namespace fs = std::filesystem;

inline constexpr const char* kCatalogName = "catalog.json";

inline Mesh load_mesh(const std::string& spec) {
  if (spec == "builtin:car") return fixtures::car();
  if (spec == "builtin:hemisphere") return fixtures::hemisphere();
  if (spec == "builtin:door") return fixtures::door_panel();
  if (spec.rfind("builtin:", 0) == 0) throw ConfigError("paths.mesh", "unknown builtin mesh '" + spec + "'");
  if (!fs::exists(spec)) throw ConfigError("paths.mesh", "file does not exist: " + spec);
  return obj::load(spec);
}

/// T0: the PNG at paths.texture, or material 0's albedo on textured texels.
inline TextureMap base_texture(const Mesh& mesh, const RunConfig& cfg) {
  if (cfg.paths.texture.empty()) {
    const Mask m = bake_texel_mask(mesh, cfg.texture_size, cfg.texture_size);
    return make_texture(m, mesh.materials.at(0).albedo);
  }
  if (!fs::exists(cfg.paths.texture)) throw ConfigError("paths.texture", "file does not exist: " + cfg.paths.texture);
  Image img = png::read_rgb(cfg.paths.texture);
  return {img, bake_texel_mask(mesh, img.width, img.height)};
}

/// Texel mask of `base` with the image read from `path`.
inline TextureMap load_texture_like(const TextureMap& base, const std::string& path, const std::string& field) {
  if (path.empty()) throw ConfigError(field, "required path is empty");
  if (!fs::exists(path)) throw ConfigError(field, "file does not exist: " + path);
  TextureMap t = base;
  t.image = png::read_rgb(path);
  if (!t.image.same_shape(base.image)) throw ConfigError(field, "texture size does not match texture_size");
  return t;
}

inline SceneCatalog make_catalog(const RunConfig& cfg) {
  return build_scene_catalog(cfg.scenes.train, cfg.scenes.test, cfg.seed);
}

inline fs::path require_dir(const std::string& path, const std::string& field) {
  if (path.empty()) throw ConfigError(field, "required path is empty");
  if (!fs::is_directory(path)) throw ConfigError(field, "directory does not exist: " + path);
  return path;
}

inline fs::path require_file(const std::string& path, const std::string& field) {
  if (path.empty()) throw ConfigError(field, "required path is empty");
  if (!fs::is_regular_file(path)) throw ConfigError(field, "file does not exist: " + path);
  return path;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// prepare-uv

struct UvStageResult {
  double energy_before = 0.0;
  double energy_after = 0.0;
  std::vector<double> history;
};

inline UvStageResult stage_prepare_uv(const RunConfig& cfg, const fs::path& dir) {
  const Mesh mesh = load_mesh(cfg.paths.mesh);
  if (cfg.uv.seed_face < 0 || static_cast<std::size_t>(cfg.uv.seed_face) >= mesh.face_count())
    throw ConfigError("uv.seed_face", "face index out of range");
  const AtlasRect rect{Vec2(cfg.uv.rect[0], cfg.uv.rect[1]), Vec2(cfg.uv.rect[2], cfg.uv.rect[3])};
  const RelaxTrace t = relax_uv_traced(mesh, static_cast<std::size_t>(cfg.uv.seed_face), {cfg.uv.iterations, rect});
  const DistortionReport before = distortion_energy(mesh), after = distortion_energy(t.mesh);
  obj::save(t.mesh, dir / "mesh_relaxed.obj");
  png::write_rgb(dir / "distortion_before.png", distortion_heatmap(mesh, before, cfg.uv.heatmap_size, cfg.uv.heatmap_size));
  png::write_rgb(dir / "distortion_after.png", distortion_heatmap(t.mesh, after, cfg.uv.heatmap_size, cfg.uv.heatmap_size));
  std::string csv = "iteration,patch_energy\n";
  for (std::size_t i = 0; i < t.energy_history.size(); ++i) csv += std::to_string(i) + "," + fmt(t.energy_history[i]) + "\n";
  write_text(dir / "uv_energy.csv", csv);
  Json summary = {{"energy_before", before.energy},     {"energy_after", after.energy},
                  {"stretched_after", after.stretched_count}, {"compressed_after", after.compressed_count},
                  {"used_unfolding", t.used_unfolding}};
  write_text(dir / "distortion.json", summary.dump(2) + "\n");
  return {before.energy, after.energy, t.energy_history};
}

// render-dataset

struct DatasetCounts {
  std::size_t victim = 0;
  std::size_t attack = 0;
  std::size_t test = 0;
};

/// victim/: train scenes with varied paint; attack/: train scenes with T0;
/// test/: held-out scenes with T0.
inline DatasetCounts stage_render_dataset(const RunConfig& cfg, const fs::path& dir) {
  const Mesh mesh = load_mesh(cfg.paths.mesh);
  const TextureMap t0 = base_texture(mesh, cfg);
  const SceneCatalog catalog = make_catalog(cfg);
  write_text(dir / kCatalogName, to_json(catalog).dump(2) + "\n");
  DatasetCounts n;
  n.victim = prerender_dataset(mesh, t0, build_scenario(catalog, cfg.victim_poses, false), dir / "victim", cfg.appearance).size();
  n.attack = prerender_dataset(mesh, t0, build_scenario(catalog, cfg.attack_poses, false), dir / "attack").size();
  n.test = prerender_dataset(mesh, t0, build_scenario(catalog, cfg.test_poses, true), dir / "test").size();
  return n;
}

inline SceneCatalog read_catalog(const fs::path& dataset) {
  std::ifstream f(dataset / kCatalogName);
  if (!f) throw IoError("cannot open " + (dataset / kCatalogName).string());
  return catalog_from_json(Json::parse(f));
}

inline FrameLabels labels_for(const FrameRecord& r) {
  return {r.pose, r.box, r.objects, r.ground_enabled, r.ground_height};
}

inline std::vector<TrainSample> load_samples(const fs::path& split, const DetectorDescriptor& d) {
  std::vector<TrainSample> out;
  for (const auto& r : read_manifest(split / kManifestName))
    out.push_back({Image8::from(load_frame(split, r)), make_targets(d, labels_for(r))});
  return out;
}

/// Detections and metrics of the detector on the frames of one split.
inline EvalReport evaluate_split(const fs::path& split, const DetectorWeights& w, const EvalConfig& e) {
  std::vector<FrameDetections> frames;
  for (const auto& r : read_manifest(split / kManifestName)) {
    auto [out, tape] = detector_forward(w, load_frame(split, r));
    frames.push_back({decode_detections(out, e.thresholds.confidence, e.nms_iou), r.box});
  }
  return evaluate_frames(frames, e.thresholds);
}

// train-victim

struct VictimStageResult {
  TrainResult train;
  EvalReport held_out;
};

inline VictimStageResult stage_train_victim(const RunConfig& cfg, const fs::path& dir,
                                            const std::function<void(const EpochLog&)>& on_epoch = {}) {
  const fs::path data = require_dir(cfg.paths.dataset, "paths.dataset");
  const std::vector<TrainSample> samples = load_samples(data / "victim", cfg.detector);
  VictimStageResult res{train_victim(cfg.detector, samples, cfg.train, on_epoch), {}};
  save_weights(res.train.weights, dir / "weights.cfw");
  std::string csv = "epoch,objectness,classification,box,total\n";
  for (const auto& e : res.train.epochs)
    csv += std::to_string(e.epoch) + "," + fmt(e.mean.objectness) + "," + fmt(e.mean.classification) + "," +
           fmt(e.mean.box) + "," + fmt(e.mean.total()) + "\n";
  write_text(dir / "train_log.csv", csv);
  res.held_out = evaluate_split(data / "test", res.train.weights, cfg.eval);
  res.held_out.texture_id = "clean";
  res.held_out.detector_id = "victim";
  emit_report({res.held_out}, dir);
  return res;
}

// optimize

inline std::vector<AttackFrame> load_attack_frames(const fs::path& dataset) {
  const SceneCatalog catalog = read_catalog(dataset);
  const fs::path split = dataset / "attack";
  std::vector<AttackFrame> frames;
  for (const auto& r : read_manifest(split / kManifestName))
    frames.push_back({r.pose, catalog.at(r.scene_id).scene, load_frame(split, r), r.scene_id});
  return frames;
}

inline AttackConfig attack_config(const RunConfig& cfg) {
  AttackConfig a = cfg.attack;
  a.eot = cfg.eot;
  a.mask_spec = cfg.mask;
  return a;
}

inline AttackResult stage_optimize(const RunConfig& cfg, const fs::path& dir,
                                   const std::function<void(const AttackStep&)>& on_step = {}) {
  const fs::path data = require_dir(cfg.paths.dataset, "paths.dataset");
  const fs::path weights = require_file(cfg.paths.weights, "paths.weights");
  const Mesh mesh = load_mesh(cfg.paths.mesh);
  const TextureMap t0 = base_texture(mesh, cfg);
  const AttackResult res =
      optimize_texture(mesh, t0, load_attack_frames(data), load_weights(weights), cfg.loss, attack_config(cfg), on_step);
  png::write_rgb(dir / "t_adv.png", res.texture.image);
  write_loss_log(res.log, dir / "loss_log.csv");
  return res;
}

// evaluate

struct TextureEval {
  EvalReport report;
  SequenceEvalReport turntable;
  std::vector<AnnotatedFrame> annotated;
};

/// Renders the held-out scenario and a turntable sweep with `texture`.
inline TextureEval evaluate_texture(const Mesh& mesh, const TextureMap& texture, const DetectorWeights& w,
                                    const RunConfig& cfg, const SceneCatalog& catalog, const std::string& texture_id) {
  const std::vector<ScenarioItem> items = build_scenario(catalog, cfg.test_poses, true);
  if (items.empty()) throw ConfigError("test_poses", "held-out scenario is empty");
  TextureEval te;
  std::vector<FrameDetections> frames;
  const std::size_t every = cfg.eval.annotate > 0 ? std::max<std::size_t>(1, items.size() / cfg.eval.annotate) : 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ReferenceFrame f = render_ref(mesh, texture, items[i].pose, items[i].scene, items[i].scene_id);
    const Image img = Image8::from(f.image).to_image();
    auto [out, tape] = detector_forward(w, img);
    frames.push_back({decode_detections(out, cfg.eval.thresholds.confidence, cfg.eval.nms_iou), f.box});
    if (every && i % every == 0 && te.annotated.size() < static_cast<std::size_t>(cfg.eval.annotate)) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%05zu", texture_id.c_str(), i);
      te.annotated.push_back({name, img, frames.back().detections});
    }
  }
  te.report = evaluate_frames(frames, cfg.eval.thresholds);
  te.report.texture_id = texture_id;
  te.report.detector_id = "victim";
  CameraPose pose = cfg.test_poses.intrinsics;
  pose.r = cfg.eval.turntable_r;
  pose.theta = cfg.eval.turntable_theta;
  pose.phi = 0.0;
  const CatalogScene& scene = catalog.at(catalog.test_ids().front());
  te.turntable = turntable_sweep(mesh, texture, w, cfg.eval.turntable_frames, pose, scene.scene, cfg.eval.thresholds,
                                 cfg.eval.nms_iou).report;
  te.report.a_physical = te.turntable.a_physical();
  return te;
}

/// Clean, random and (when paths.adv_texture is set) adversarial rows.
inline std::vector<TextureEval> stage_evaluate(const RunConfig& cfg, const fs::path& dir) {
  const fs::path weights = require_file(cfg.paths.weights, "paths.weights");
  const Mesh mesh = load_mesh(cfg.paths.mesh);
  const TextureMap t0 = base_texture(mesh, cfg);
  const DetectorWeights w = load_weights(weights);
  const SceneCatalog catalog = make_catalog(cfg);
  std::vector<TextureEval> out;
  out.push_back(evaluate_texture(mesh, t0, w, cfg, catalog, "clean"));
  out.push_back(evaluate_texture(mesh, random_texture(t0, cfg.seed, cfg.eval.random_blocks), w, cfg, catalog, "random"));
  if (!cfg.paths.adv_texture.empty())
    out.push_back(evaluate_texture(mesh, load_texture_like(t0, cfg.paths.adv_texture, "paths.adv_texture"), w, cfg, catalog, "adv"));
  std::vector<EvalReport> rows;
  std::vector<AnnotatedFrame> panels;
  std::string seq = "texture_id,f_d,f_o,a_physical\n";
  for (const auto& e : out) {
    rows.push_back(e.report);
    panels.insert(panels.end(), e.annotated.begin(), e.annotated.end());
    seq += e.report.texture_id + "," + std::to_string(e.turntable.f_d) + "," + std::to_string(e.turntable.f_o) + "," +
           fmt(e.turntable.a_physical()) + "\n";
  }
  emit_report(rows, dir, panels);
  write_text(dir / "turntable.csv", seq);
  return out;
}

// export

/// Writes the printable map: T_adv with non-textured texels white, the texel
/// mask, and the raw texture.
inline void stage_export(const RunConfig& cfg, const fs::path& dir) {
  const Mesh mesh = load_mesh(cfg.paths.mesh);
  const TextureMap t = load_texture_like(base_texture(mesh, cfg), cfg.paths.adv_texture, "paths.adv_texture");
  Image printable = t.image;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      if (!t.textured(x, y)) printable.set(x, y, Rgb(1.0, 1.0, 1.0));
  png::write_rgb(dir / "t_adv.png", t.image);
  png::write_rgb(dir / "t_adv_printable.png", printable);
  png::write_mask(dir / "texel_mask.png", t.texel_mask);
}

}  // namespace camo
