#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/core/png_io.hpp"
#include "camo/eval/metrics.hpp"

namespace camo {

inline constexpr const char* kReportHeader = "texture_id,detector_id,p_at_05,asr,a_physical";

/// Pixel rectangle an outline of `b` occupies: [x0, x1] x [y0, y1], inclusive,
/// clipped to the image.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const { return x1 < x0 || y1 < y0; }
};

inline PixelRect outline_rect(const Box& b, int width, int height) {
  PixelRect r{static_cast<int>(std::floor(b.x0)), static_cast<int>(std::floor(b.y0)),
              static_cast<int>(std::ceil(b.x1)) - 1, static_cast<int>(std::ceil(b.y1)) - 1};
  r.x0 = std::max(r.x0, 0);
  r.y0 = std::max(r.y0, 0);
  r.x1 = std::min(r.x1, width - 1);
  r.y1 = std::min(r.y1, height - 1);
  return r;
}

inline const Rgb kCarBoxColor{0.0, 1.0, 0.0};
inline const Rgb kOtherBoxColor{1.0, 1.0, 0.0};
inline const Rgb kLabelColor{1.0, 1.0, 1.0};

namespace detail {

/// 3x5 glyphs for '0'-'9' and '.', one row per 3-bit nibble, top row first.
inline const std::array<std::uint8_t, 5>& glyph(char c) {
  static const std::array<std::array<std::uint8_t, 5>, 11> g{{
      {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1}, {7, 4, 7, 1, 7},
      {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}, {0, 0, 0, 0, 2},
  }};
  return c == '.' ? g[10] : g[static_cast<std::size_t>(c - '0')];
}

}  // namespace detail

inline void draw_text(Image& img, int x, int y, const std::string& text, const Rgb& color) {
  for (char c : text) {
    if ((c < '0' || c > '9') && c != '.') throw Error("draw_text: unsupported character");
    const auto& rows = detail::glyph(c);
    for (int r = 0; r < 5; ++r)
      for (int k = 0; k < 3; ++k)
        if (rows[r] & (4 >> k) && img.width > x + k && x + k >= 0 && img.height > y + r && y + r >= 0)
          img.set(x + k, y + r, color);
    x += 4;
  }
}

inline void draw_outline(Image& img, const Box& b, const Rgb& color) {
  const PixelRect r = outline_rect(b, img.width, img.height);
  if (r.empty()) return;
  for (int x = r.x0; x <= r.x1; ++x) {
    img.set(x, r.y0, color);
    img.set(x, r.y1, color);
  }
  for (int y = r.y0; y <= r.y1; ++y) {
    img.set(r.x0, y, color);
    img.set(r.x1, y, color);
  }
}

/// Frame with every detection outlined (car green, others yellow) and its
/// confidence printed with two decimals above the box, or inside when the box
/// touches the top edge.
inline Image annotate(const Image& frame, const std::vector<Detection>& detections, int target_class = 0) {
  Image img = frame;
  for (const auto& d : detections) draw_outline(img, d.box, d.label == target_class ? kCarBoxColor : kOtherBoxColor);
  for (const auto& d : detections) {
    const PixelRect r = outline_rect(d.box, img.width, img.height);
    if (r.empty()) continue;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", d.confidence);
    const int y = r.y0 >= 6 ? r.y0 - 6 : r.y0 + 2;
    draw_text(img, r.x0 + (r.y0 >= 6 ? 0 : 2), y, buf, kLabelColor);
  }
  return img;
}

inline std::string report_row(const EvalReport& r) {
  char buf[128];
  std::string a = "";
  if (r.a_physical) {
    std::snprintf(buf, sizeof buf, "%.17g", *r.a_physical);
    a = buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,", r.p_at_05, r.asr);
  return r.texture_id + "," + r.detector_id + "," + buf + a;
}

struct AnnotatedFrame {
  std::string name;  // file stem
  Image image;
  std::vector<Detection> detections;
};

/// Writes report.csv (header plus one row per report) and annotated/<name>.png.
inline void emit_report(const std::vector<EvalReport>& reports, const std::filesystem::path& out_dir,
                        const std::vector<AnnotatedFrame>& frames = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const auto csv = out_dir / "report.csv";
  std::ofstream f(csv, std::ios::binary);
  if (!f) throw IoError("cannot open " + csv.string() + " for writing");
  f << kReportHeader << '\n';
  for (const auto& r : reports) f << report_row(r) << '\n';
  if (!f) throw IoError("failed writing " + csv.string());
  if (frames.empty()) return;
  std::filesystem::create_directories(out_dir / "annotated", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "annotated").string() + ": " + ec.message());
  for (const auto& a : frames) png::write_rgb(out_dir / "annotated" / (a.name + ".png"), annotate(a.image, a.detections));
}

/// Parses a report.csv back into (texture_id, detector_id, p, asr, optional a_physical).
inline std::vector<EvalReport> read_report(const std::filesystem::path& csv) {
  std::ifstream f(csv);
  if (!f) throw IoError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(f, line) || line != kReportHeader) throw ParseError(csv.string(), 1, "bad report header");
  std::vector<EvalReport> out;
  std::size_t n = 1;
  while (std::getline(f, line)) {
    ++n;
    std::vector<std::string> cols(1);
    for (char c : line) {
      if (c == ',') cols.emplace_back();
      else cols.back() += c;
    }
    if (cols.size() != 5) throw ParseError(csv.string(), n, "expected 5 columns");
    EvalReport r;
    r.texture_id = cols[0];
    r.detector_id = cols[1];
    try {
      r.p_at_05 = std::stod(cols[2]);
      r.asr = std::stod(cols[3]);
      if (!cols[4].empty()) r.a_physical = std::stod(cols[4]);
    } catch (const std::exception&) {
      throw ParseError(csv.string(), n, "bad number");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace camo
