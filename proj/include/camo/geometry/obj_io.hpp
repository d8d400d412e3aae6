#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/geometry/mesh.hpp"

namespace camo::obj {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double to_double(std::string_view tok, const std::string& src, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(src, line, "expected a number, got '" + std::string(tok) + "'");
  }
  return v;
}

inline long to_index(std::string_view tok, const std::string& src, std::size_t line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v == 0) {
    throw ParseError(src, line, "bad index '" + std::string(tok) + "'");
  }
  return v;
}

// OBJ indices are 1-based; negative values count back from the end.
inline int resolve(long idx, std::size_t count, const std::string& src, std::size_t line, const char* what) {
  const long r = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (r < 0 || r >= static_cast<long>(count)) {
    throw ParseError(src, line, std::string(what) + " index " + std::to_string(idx) + " out of range");
  }
  return static_cast<int>(r);
}

inline std::map<std::string, Material> read_mtl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open material library " + path.string());
  std::map<std::string, Material> out;
  Material* cur = nullptr;
  std::string line;
  std::size_t lineno = 0;
  const std::string src = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok[0] == "newmtl") {
      if (tok.size() != 2) throw ParseError(src, lineno, "newmtl expects one name");
      Material m;
      m.name = std::string(tok[1]);
      cur = &(out[m.name] = m);
      continue;
    }
    if (!cur) throw ParseError(src, lineno, "attribute before newmtl");
    if (tok[0] == "Kd") {
      if (tok.size() != 4) throw ParseError(src, lineno, "Kd expects 3 values");
      cur->albedo = {to_double(tok[1], src, lineno), to_double(tok[2], src, lineno), to_double(tok[3], src, lineno)};
    } else if (tok[0] == "Ks") {
      if (tok.size() != 4 && tok.size() != 2) throw ParseError(src, lineno, "Ks expects 1 or 3 values");
      double s = 0.0;
      for (std::size_t i = 1; i < tok.size(); ++i) s += to_double(tok[i], src, lineno);
      cur->specular = s / static_cast<double>(tok.size() - 1);
    } else if (tok[0] == "Ns") {
      if (tok.size() != 2) throw ParseError(src, lineno, "Ns expects 1 value");
      cur->shininess = to_double(tok[1], src, lineno);
    }
  }
  return out;
}

}  // namespace detail

/// Parses Wavefront OBJ text (v / vt / f / mtllib / usemtl). Faces must be
/// triangles; a face is textured iff all three corners carry a vt index.
inline Mesh parse(std::istream& in, const std::string& source = "<obj>",
                  const std::filesystem::path& base_dir = {}) {
  Mesh mesh;
  std::vector<Vec2> texcoords;
  std::map<std::string, Material> library;
  std::map<std::string, int> material_index;
  int current_material = 0;
  std::vector<std::size_t> face_lines;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = detail::split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    const std::string_view kind = tok[0];
    if (kind == "v") {
      if (tok.size() < 4) throw ParseError(source, lineno, "vertex needs 3 coordinates");
      mesh.vertices.emplace_back(detail::to_double(tok[1], source, lineno), detail::to_double(tok[2], source, lineno),
                                 detail::to_double(tok[3], source, lineno));
    } else if (kind == "vt") {
      if (tok.size() < 3) throw ParseError(source, lineno, "texcoord needs 2 values");
      texcoords.emplace_back(detail::to_double(tok[1], source, lineno), detail::to_double(tok[2], source, lineno));
    } else if (kind == "f") {
      if (tok.size() != 4) throw ParseError(source, lineno, "only triangles are supported");
      Face face{};
      FaceUv corner_uv{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
      int with_uv = 0;
      for (int k = 0; k < 3; ++k) {
        const std::string_view t = tok[k + 1];
        const auto s1 = t.find('/');
        face[k] = detail::resolve(detail::to_index(t.substr(0, s1), source, lineno), mesh.vertices.size(), source,
                                  lineno, "vertex");
        if (s1 != std::string_view::npos) {
          const auto rest = t.substr(s1 + 1);
          const auto s2 = rest.find('/');
          const auto vt = rest.substr(0, s2);
          if (!vt.empty()) {
            corner_uv[k] = texcoords[detail::resolve(detail::to_index(vt, source, lineno), texcoords.size(), source,
                                                     lineno, "texcoord")];
            ++with_uv;
          }
        }
      }
      if (with_uv != 0 && with_uv != 3) throw ParseError(source, lineno, "face mixes corners with and without uv");
      for (const Vec2& t : corner_uv) {
        if (!(t.x() >= 0.0 && t.x() <= 1.0 && t.y() >= 0.0 && t.y() <= 1.0)) {
          throw ParseError(source, lineno, "uv outside [0,1]");
        }
      }
      mesh.add_face(face, corner_uv, with_uv == 3, current_material);
      face_lines.push_back(lineno);
    } else if (kind == "mtllib") {
      if (tok.size() != 2) throw ParseError(source, lineno, "mtllib expects one file");
      library = detail::read_mtl(base_dir / std::string(tok[1]));
    } else if (kind == "usemtl") {
      if (tok.size() != 2) throw ParseError(source, lineno, "usemtl expects one name");
      const std::string name(tok[1]);
      auto it = material_index.find(name);
      if (it == material_index.end()) {
        auto lib = library.find(name);
        if (lib == library.end()) throw ParseError(source, lineno, "unknown material '" + name + "'");
        it = material_index.emplace(name, mesh.add_material(lib->second)).first;
      }
      current_material = it->second;
    }
    // vn, o, g, s and other records carry nothing the toolkit uses.
  }

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!(face_area(mesh, f) > kDegenerateArea)) {
      throw GeometryError("degenerate face " + std::to_string(f) + " (" + source + ":" + std::to_string(face_lines[f]) +
                          "): area <= 1e-12");
    }
  }
  validate(mesh);
  return mesh;
}

inline Mesh load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh " + path.string());
  return parse(in, path.string(), path.parent_path());
}

/// Writes `<stem>.obj` and, when the mesh carries named materials, `<stem>.mtl`.
inline void save(const Mesh& mesh, const std::filesystem::path& path) {
  const auto mtl_path = std::filesystem::path(path).replace_extension(".mtl");
  {
    std::ofstream mtl(mtl_path);
    if (!mtl) throw IoError("cannot write " + mtl_path.string());
    mtl << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const Material& m : mesh.materials) {
      mtl << "newmtl " << m.name << "\nKd " << m.albedo[0] << ' ' << m.albedo[1] << ' ' << m.albedo[2] << "\nKs "
          << m.specular << "\nNs " << m.shininess << "\n\n";
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "mtllib " << mtl_path.filename().string() << "\n";
  for (const Vec3& p : mesh.vertices) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << "\n";
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!mesh.is_textured(f)) continue;
    for (const Vec2& t : mesh.uv[f]) out << "vt " << t.x() << ' ' << t.y() << "\n";
  }
  int current = -1;
  std::size_t vt = 1;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (mesh.material_of_face[f] != current) {
      current = mesh.material_of_face[f];
      out << "usemtl " << mesh.materials[current].name << "\n";
    }
    out << 'f';
    for (int k = 0; k < 3; ++k) {
      out << ' ' << mesh.faces[f][k] + 1;
      if (mesh.is_textured(f)) out << '/' << vt++;
    }
    out << "\n";
  }
  if (!out) throw IoError("disk error writing " + path.string());
}

}  // namespace camo::obj
