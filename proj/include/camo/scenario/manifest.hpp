#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "camo/core/box.hpp"
#include "camo/core/error.hpp"
#include "camo/render/camera.hpp"
#include "camo/scenario/json_io.hpp"

namespace camo {

/// One pre-rendered frame: where it is, how it was taken, what it shows.
struct FrameRecord {
  std::string file;  // relative to the manifest's directory
  int scene_id = 0;
  CameraPose pose;
  std::optional<Box> box;           // vehicle
  std::vector<LabeledBox> objects;  // distractors
  bool ground_enabled = true;
  double ground_height = 0.0;
  std::string appearance = "clean";  // paint of the vehicle in this frame

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

using Manifest = std::vector<FrameRecord>;

inline Json to_json(const FrameRecord& r) {
  Json objects = Json::array();
  for (const auto& o : r.objects) objects.push_back({{"label", class_name(o.label)}, {"box", to_json(o.box)}});
  return {{"file", r.file},
          {"scene_id", r.scene_id},
          {"pose", to_json(r.pose)},
          {"box", r.box ? to_json(*r.box) : Json(nullptr)},
          {"objects", objects},
          {"ground", {{"enabled", r.ground_enabled}, {"height", r.ground_height}}},
          {"appearance", r.appearance}};
}

inline FrameRecord record_from_json(const Json& j) {
  FrameRecord r;
  r.file = j.at("file").get<std::string>();
  r.scene_id = j.at("scene_id").get<int>();
  r.pose = pose_from_json(j.at("pose"));
  if (!j.at("box").is_null()) r.box = box_from_json(j.at("box"));
  for (const auto& o : j.at("objects")) r.objects.push_back({class_from_name(o.at("label").get<std::string>()), box_from_json(o.at("box"))});
  r.ground_enabled = j.at("ground").at("enabled").get<bool>();
  r.ground_height = j.at("ground").at("height").get<double>();
  r.appearance = j.value("appearance", std::string("clean"));
  return r;
}

/// One JSON object per line.
inline void write_manifest(const Manifest& frames, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : frames) f << to_json(r).dump() << '\n';
  if (!f) throw IoError("failed writing " + path.string());
}

inline Manifest parse_manifest(std::istream& in, const std::string& source = "<manifest>") {
  Manifest out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(source, n, std::string("malformed manifest record: ") + e.what());
    }
  }
  return out;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  return parse_manifest(f, path.string());
}

}  // namespace camo
