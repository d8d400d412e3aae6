#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/core/random.hpp"

namespace camo {

/// Texture of a random grid of `blocks` x `blocks` colors enlarged to the
/// map by repeating pixels; only textured texels change.
inline TextureMap random_texture(const TextureMap& base, std::uint64_t seed, int blocks = 32) {
  if (blocks < 1) throw Error("random_texture: blocks must be >= 1");
  Rng rng(derive_seed(seed, 0x8A2D0));
  std::vector<Rgb> colors(static_cast<std::size_t>(blocks) * blocks);
  for (auto& c : colors) {
    const double r = uniform01(rng), g = uniform01(rng), b = uniform01(rng);
    c = Rgb(r, g, b);
  }
  TextureMap out = base;
  const int w = base.width(), h = base.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (base.textured(x, y)) out.image.set(x, y, colors[static_cast<std::size_t>(y * blocks / h) * blocks + x * blocks / w]);
  return out;
}

/// Paint variation of the victim's training frames.
enum class Appearance { clean, solid, blocks };

inline const char* to_string(Appearance a) {
  switch (a) {
    case Appearance::clean: return "clean";
    case Appearance::solid: return "solid";
    case Appearance::blocks: return "blocks";
  }
  return "clean";
}

inline Appearance appearance_from_string(const std::string& s) {
  if (s == "clean") return Appearance::clean;
  if (s == "solid") return Appearance::solid;
  if (s == "blocks") return Appearance::blocks;
  throw Error("unknown appearance '" + s + "'");
}

/// Per-frame paint of a training set: a quarter keeps the clean texture, a
/// quarter gets one random color, half get random blocks of 2, 4 or 8 texels.
struct AppearanceConfig {
  bool vary = false;
  std::uint64_t seed = 99;
};

struct FramePaint {
  Appearance kind = Appearance::clean;
  TextureMap texture;
};

inline FramePaint paint_for_frame(const TextureMap& base, const AppearanceConfig& cfg, std::uint64_t frame) {
  if (!cfg.vary) return {Appearance::clean, base};
  Rng rng(derive_seed(cfg.seed, 0xA99E, frame));
  const unsigned kind = static_cast<unsigned>(rng() % 4);
  if (kind == 0) return {Appearance::clean, base};
  FramePaint p{kind == 1 ? Appearance::solid : Appearance::blocks, base};
  const int w = base.width(), h = base.height();
  if (kind == 1) {
    const double r = uniform01(rng), g = uniform01(rng), b = uniform01(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (base.textured(x, y)) p.texture.image.set(x, y, Rgb(r, g, b));
    return p;
  }
  const int size = 2 << (rng() % 3);
  const int nx = (w + size - 1) / size, ny = (h + size - 1) / size;
  std::vector<Rgb> colors(static_cast<std::size_t>(nx) * ny);
  for (auto& c : colors) {
    const double r = uniform01(rng), g = uniform01(rng), b = uniform01(rng);
    c = Rgb(r, g, b);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (base.textured(x, y)) p.texture.image.set(x, y, colors[static_cast<std::size_t>(y / size) * nx + x / size]);
  return p;
}

}  // namespace camo
