#pragma once

#include <string>

#include "camo/core/box.hpp"
#include "camo/core/error.hpp"
#include "camo/render/camera.hpp"
#include "camo/render/scene.hpp"
#include "camo/scenario/catalog.hpp"
#include "json.hpp"

namespace camo {

using Json = nlohmann::json;

inline Json vec_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Eigen::Vector3d vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline Json to_json(const CameraPose& p) {
  return {{"r", p.r}, {"theta", p.theta}, {"phi", p.phi}, {"fov_y", p.fov_y},
          {"width", p.width}, {"height", p.height}, {"target", vec_json(p.target)}};
}

inline CameraPose pose_from_json(const Json& j) {
  CameraPose p;
  p.r = j.at("r").get<double>();
  p.theta = j.at("theta").get<double>();
  p.phi = j.at("phi").get<double>();
  p.fov_y = j.at("fov_y").get<double>();
  p.width = j.at("width").get<int>();
  p.height = j.at("height").get<int>();
  p.target = vec_from(j.at("target"));
  return p;
}

inline Json to_json(const Box& b) { return Json::array({b.x0, b.y0, b.x1, b.y1}); }

inline Box box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("box must be [x0, y0, x1, y1]");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

inline const char* class_name(ObjectClass c) {
  switch (c) {
    case ObjectClass::car: return "car";
    case ObjectClass::ground: return "ground";
    case ObjectClass::distractor: return "distractor";
    case ObjectClass::background: return "background";
  }
  return "?";
}

inline ObjectClass class_from_name(const std::string& s) {
  if (s == "car") return ObjectClass::car;
  if (s == "ground") return ObjectClass::ground;
  if (s == "distractor") return ObjectClass::distractor;
  if (s == "background") return ObjectClass::background;
  throw Error("unknown object class '" + s + "'");
}

inline Json to_json(const SceneConfig& s) {
  Json dl = Json::array(), pl = Json::array(), ds = Json::array();
  for (const auto& l : s.directional_lights) dl.push_back({{"direction", vec_json(l.direction)}, {"intensity", vec_json(l.intensity)}});
  for (const auto& l : s.point_lights) pl.push_back({{"position", vec_json(l.position)}, {"intensity", vec_json(l.intensity)}});
  for (const auto& d : s.distractors)
    ds.push_back({{"center", vec_json(d.center)}, {"size", vec_json(d.size)}, {"albedo", vec_json(d.albedo)}});
  return {{"ambient", vec_json(s.ambient)},
          {"directional_lights", dl},
          {"point_lights", pl},
          {"ground", {{"enabled", s.ground.enabled}, {"height", s.ground.height}, {"albedo", vec_json(s.ground.albedo)}}},
          {"background", vec_json(s.background)},
          {"distractors", ds}};
}

inline SceneConfig scene_from_json(const Json& j) {
  SceneConfig s;
  s.ambient = vec_from(j.at("ambient"));
  for (const auto& l : j.at("directional_lights")) s.directional_lights.push_back({vec_from(l.at("direction")), vec_from(l.at("intensity"))});
  for (const auto& l : j.at("point_lights")) s.point_lights.push_back({vec_from(l.at("position")), vec_from(l.at("intensity"))});
  const Json& g = j.at("ground");
  s.ground = {g.at("enabled").get<bool>(), g.at("height").get<double>(), vec_from(g.at("albedo"))};
  s.background = vec_from(j.at("background"));
  for (const auto& d : j.at("distractors")) s.distractors.push_back({vec_from(d.at("center")), vec_from(d.at("size")), vec_from(d.at("albedo"))});
  return s;
}

inline Json to_json(const SceneCatalog& c) {
  Json arr = Json::array();
  for (const auto& s : c.scenes) arr.push_back({{"id", s.id}, {"split", s.test ? "test" : "train"}, {"scene", to_json(s.scene)}});
  return {{"scenes", arr}};
}

inline SceneCatalog catalog_from_json(const Json& j) {
  SceneCatalog c;
  for (const auto& s : j.at("scenes")) {
    const std::string split = s.at("split").get<std::string>();
    if (split != "train" && split != "test") throw Error("scene split must be 'train' or 'test'");
    c.scenes.push_back({s.at("id").get<int>(), split == "test", scene_from_json(s.at("scene"))});
  }
  return c;
}

}  // namespace camo
