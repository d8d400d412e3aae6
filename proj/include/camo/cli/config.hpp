#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "camo/attack/optimize.hpp"
#include "camo/composer/composer.hpp"
#include "camo/core/error.hpp"
#include "camo/eval/metrics.hpp"
#include "camo/scenario/appearance.hpp"
#include "camo/scenario/json_io.hpp"
#include "camo/scenario/poses.hpp"
#include "camo/victim/detector.hpp"
#include "camo/victim/train.hpp"

namespace camo {

/// A configuration problem tied to one dotted field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& msg) : Error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PathsConfig {
  std::string mesh = "builtin:car";  // OBJ path or builtin:{car,hemisphere,door}
  std::string texture;               // PNG; empty paints textured texels with material 0
  std::string dataset;               // render-dataset output
  std::string weights;               // victim weight file
  std::string adv_texture;           // optimized texture PNG
  std::string output_root;           // empty: $CAMO_OUTPUT_ROOT, else ./runs
};

struct UvConfig {
  std::int64_t seed_face = 0;
  int iterations = 200;
  std::vector<double> rect{0.0, 0.0, 1.0, 1.0};
  int heatmap_size = 256;
};

struct ScenesConfig {
  int train = 9;
  int test = 1;
};

struct EvalConfig {
  EvalThresholds thresholds;
  double nms_iou = 0.5;
  int turntable_frames = 90;
  double turntable_r = 10.0;
  double turntable_theta = 20.0;
  int random_blocks = 32;
  int annotate = 4;  // annotated frames per texture
};

struct RunConfig {
  std::uint64_t seed = 7;  // scene catalog and random texture
  int texture_size = 128;
  PathsConfig paths;
  UvConfig uv;
  ScenesConfig scenes;
  PoseSamplingConfig victim_poses = [] {
    PoseSamplingConfig p;
    p.distance_mode = DistanceMode::cycle;
    return p;
  }();
  PoseSamplingConfig attack_poses;
  PoseSamplingConfig test_poses;
  AppearanceConfig appearance{true, 99};
  DetectorDescriptor detector;
  TrainConfig train;
  MaskMapSpec mask;
  EotConfig eot;
  LossConfig loss;
  AttackConfig attack;
  EvalConfig eval;
};

namespace detail {

inline const char* to_string(DistanceMode m) { return m == DistanceMode::cross ? "cross" : "cycle"; }
inline const char* to_string(DrLighting m) { return m == DrLighting::dark_light ? "dark_light" : "frame_scene"; }

template <class T>
void from_string(const std::string& s, T& out) {
  if constexpr (std::is_same_v<T, DistanceMode>) {
    if (s == "cross") out = DistanceMode::cross;
    else if (s == "cycle") out = DistanceMode::cycle;
    else throw Error("expected cross or cycle, got '" + s + "'");
  } else if constexpr (std::is_same_v<T, DrLighting>) {
    if (s == "dark_light") out = DrLighting::dark_light;
    else if (s == "frame_scene") out = DrLighting::frame_scene;
    else throw Error("expected dark_light or frame_scene, got '" + s + "'");
  } else {
    out = activation_from_string(s);
  }
}

/// Walks every field with its dotted name; the same walk writes and reads JSON.
template <class V>
void visit_poses(V& v, const std::string& p, PoseSamplingConfig& c) {
  v(p + ".distances", c.distances);
  v(p + ".low_polar_angles", c.low_polar_angles);
  v(p + ".high_polar_angles", c.high_polar_angles);
  v(p + ".low_azimuth_step", c.low_azimuth_step);
  v(p + ".high_azimuth_step", c.high_azimuth_step);
  v(p + ".distance_mode", c.distance_mode);
  v(p + ".fov_y", c.intrinsics.fov_y);
  v(p + ".width", c.intrinsics.width);
  v(p + ".height", c.intrinsics.height);
}

template <class V>
void visit(V& v, RunConfig& c) {
  v("seed", c.seed);
  v("texture_size", c.texture_size);
  v("paths.mesh", c.paths.mesh);
  v("paths.texture", c.paths.texture);
  v("paths.dataset", c.paths.dataset);
  v("paths.weights", c.paths.weights);
  v("paths.adv_texture", c.paths.adv_texture);
  v("paths.output_root", c.paths.output_root);
  v("uv.seed_face", c.uv.seed_face);
  v("uv.iterations", c.uv.iterations);
  v("uv.rect", c.uv.rect);
  v("uv.heatmap_size", c.uv.heatmap_size);
  v("scenes.train", c.scenes.train);
  v("scenes.test", c.scenes.test);
  visit_poses(v, "victim_poses", c.victim_poses);
  visit_poses(v, "attack_poses", c.attack_poses);
  visit_poses(v, "test_poses", c.test_poses);
  v("appearance.vary", c.appearance.vary);
  v("appearance.seed", c.appearance.seed);
  v("detector.input_size", c.detector.input_size);
  v("detector.channels", c.detector.channels);
  v("detector.context", c.detector.context);
  v("detector.num_classes", c.detector.num_classes);
  v("detector.activation", c.detector.activation);
  v("detector.anchor", c.detector.anchor);
  v("train.epochs", c.train.epochs);
  v("train.lr", c.train.lr);
  v("train.batch", c.train.batch);
  v("train.seed", c.train.seed);
  v("train.positive_weight", c.train.positive_weight);
  v("train.class_weight", c.train.class_weight);
  v("train.box_weight", c.train.box_weight);
  v("train.flip", c.train.flip);
  v("train.brightness_jitter", c.train.brightness_jitter);
  v("train.contrast_jitter", c.train.contrast_jitter);
  v("mask.textured", c.mask.textured);
  v("mask.untextured", c.mask.untextured);
  v("eot.brightness", c.eot.brightness);
  v("eot.contrast_min", c.eot.contrast_min);
  v("eot.contrast_max", c.eot.contrast_max);
  v("eot.noise_std", c.eot.noise_std);
  v("eot.seed", c.eot.seed);
  v("loss.beta", c.loss.beta);
  v("loss.gamma", c.loss.gamma);
  v("loss.target_class", c.loss.target_class);
  v("loss.tau_attack", c.loss.tau_attack);
  v("loss.fallback_k", c.loss.fallback_k);
  v("attack.lr", c.attack.lr);
  v("attack.epochs", c.attack.epochs);
  v("attack.beta1", c.attack.beta1);
  v("attack.beta2", c.attack.beta2);
  v("attack.eps", c.attack.eps);
  v("attack.plain_sgd", c.attack.plain_sgd);
  v("attack.eot_draws", c.attack.eot_draws);
  v("attack.seed", c.attack.seed);
  v("attack.clamp_min", c.attack.clamp_min);
  v("attack.clamp_max", c.attack.clamp_max);
  v("attack.shuffle", c.attack.shuffle);
  v("attack.dr_lighting", c.attack.dr_lighting);
  v("eval.confidence", c.eval.thresholds.confidence);
  v("eval.iou", c.eval.thresholds.iou);
  v("eval.nms_iou", c.eval.nms_iou);
  v("eval.turntable_frames", c.eval.turntable_frames);
  v("eval.turntable_r", c.eval.turntable_r);
  v("eval.turntable_theta", c.eval.turntable_theta);
  v("eval.random_blocks", c.eval.random_blocks);
  v("eval.annotate", c.eval.annotate);
}

inline std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts(1);
  for (char ch : key) {
    if (ch == '.') parts.emplace_back();
    else parts.back() += ch;
  }
  return parts;
}

template <class T>
Json to_json_value(const T& v) {
  if constexpr (std::is_enum_v<T>) return to_string(v);
  else return v;
}

template <class T>
void from_json_value(const Json& j, T& out) {
  if constexpr (std::is_enum_v<T>) {
    from_string(j.get<std::string>(), out);
  } else if constexpr (std::is_same_v<T, double>) {
    if (!j.is_number()) throw Error("expected a number");
    out = j.get<double>();
  } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!j.is_number_integer()) throw Error("expected an integer");
    out = j.get<T>();
  } else {
    out = j.get<T>();
  }
}

}  // namespace detail

/// Nested JSON with every field, defaults included.
inline Json to_json(const RunConfig& cfg) {
  RunConfig c = cfg;
  Json j = Json::object();
  auto put = [&](const std::string& key, auto& value) {
    Json* node = &j;
    for (const auto& part : detail::split_key(key)) node = &(*node)[part];
    *node = detail::to_json_value(value);
  };
  detail::visit(put, c);
  return j;
}

/// Overlays the keys present in `j` onto `base`; unknown keys and bad values
/// raise ConfigError naming the field.
inline RunConfig apply_json(const Json& j, RunConfig base = {}) {
  std::set<std::string> known;
  auto get = [&](const std::string& key, auto& value) {
    known.insert(key);
    const Json* node = &j;
    for (const auto& part : detail::split_key(key)) {
      if (!node->is_object() || !node->contains(part)) return;
      node = &node->at(part);
    }
    try {
      detail::from_json_value(*node, value);
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
  };
  detail::visit(get, base);
  std::vector<std::pair<std::string, const Json*>> stack{{"", &j}};
  while (!stack.empty()) {
    auto [prefix, node] = stack.back();
    stack.pop_back();
    if (!node->is_object()) {
      if (!known.count(prefix)) throw ConfigError(prefix.empty() ? "<root>" : prefix, "unknown configuration key");
      continue;
    }
    if (!prefix.empty() && known.count(prefix)) throw ConfigError(prefix, "expected a value, got an object");
    for (auto it = node->begin(); it != node->end(); ++it)
      stack.push_back({prefix.empty() ? it.key() : prefix + "." + it.key(), &it.value()});
  }
  return base;
}

/// Applies one `key=value` override; the value is parsed as JSON, falling
/// back to a plain string.
inline RunConfig apply_override(const RunConfig& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json patch = Json::object();
  Json* node = &patch;
  for (const auto& part : detail::split_key(key)) node = &(*node)[part];
  *node = value;
  return apply_json(patch, base);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open " + path.string());
  Json j = Json::parse(f, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config", "malformed JSON in " + path.string());
  return apply_json(j);
}

/// Range checks shared by every subcommand.
inline void validate(const RunConfig& c) {
  auto check = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(field, e.what());
    }
  };
  if (c.texture_size < 8) throw ConfigError("texture_size", "must be >= 8");
  if (c.scenes.train < 1) throw ConfigError("scenes.train", "must be >= 1");
  if (c.scenes.test < 1) throw ConfigError("scenes.test", "must be >= 1");
  if (c.uv.rect.size() != 4) throw ConfigError("uv.rect", "expects [u0, v0, u1, v1]");
  check("victim_poses", [&] { validate(c.victim_poses); });
  check("attack_poses", [&] { validate(c.attack_poses); });
  check("test_poses", [&] { validate(c.test_poses); });
  check("detector", [&] { validate(c.detector); });
  check("train", [&] { validate(c.train); });
  check("mask", [&] { validate(c.mask); });
  check("eot", [&] { validate(c.eot); });
  check("loss", [&] { validate(c.loss); });
  check("attack", [&] { validate(c.attack); });
  check("eval", [&] { validate(c.eval.thresholds); });
  if (c.eval.turntable_frames < 8) throw ConfigError("eval.turntable_frames", "must be >= 8");
  if (c.victim_poses.intrinsics.width != c.detector.input_size || c.victim_poses.intrinsics.height != c.detector.input_size)
    throw ConfigError("victim_poses.width", "frame size must equal detector.input_size");
}

}  // namespace camo
