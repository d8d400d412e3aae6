#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/core/random.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/diff_render.hpp"
#include "camo/render/raster.hpp"
#include "camo/render/scene.hpp"

namespace camo {

/// Two gray levels painted into the mask texture: textured texels get
/// `textured`, every other surface gets `untextured`.
struct MaskMapSpec {
  double textured = 0.8;
  double untextured = 0.2;
};

inline void validate(const MaskMapSpec& s) {
  if (!(s.textured >= 0.0 && s.textured <= 1.0 && s.untextured >= 0.0 && s.untextured <= 1.0)) {
    throw Error("mask map gray levels must lie in [0,1]");
  }
  if (!(std::abs(s.textured - s.untextured) >= 0.3)) throw Error("mask map gray levels must differ by at least 0.3");
}

struct MaskMap {
  TextureMap texture;
  MaskMapSpec spec;
};

inline MaskMap make_mask_map(const MaskMapSpec& spec, const Mask& texel_mask) {
  validate(spec);
  MaskMap m{TextureMap{Image(texel_mask.width, texel_mask.height), texel_mask}, spec};
  for (int y = 0; y < texel_mask.height; ++y)
    for (int x = 0; x < texel_mask.width; ++x)
      m.texture.image.set(x, y, Rgb::Constant(texel_mask(x, y) ? spec.textured : spec.untextured));
  return m;
}

/// Mask render without the lighting guard. Only for reproducing what a lit
/// mask render looks like.
inline Image render_mask_unchecked(const Mesh& mesh, const MaskMap& mask_map, const CameraPose& pose,
                                   const SceneConfig& scene) {
  DiffRenderOptions opt;
  opt.untextured_albedo = Rgb::Constant(mask_map.spec.untextured);
  return render_diff(mesh, mask_map.texture, pose, scene, opt).first;
}

/// Renders the mask texture in dark-light mode (ambient light only).
inline Image render_dark(const Mesh& mesh, const MaskMap& mask_map, const CameraPose& pose,
                         const SceneConfig& scene = dark_light_scene()) {
  if (!scene.dark_light()) {
    throw Error("render_dark requires a dark-light scene: directional and point lights produce overlapping gray ranges");
  }
  return render_mask_unchecked(mesh, mask_map, pose, scene);
}

/// Gray-level ranges of textured and untextured vehicle pixels and the
/// threshold separating them. An empty group reports an empty range
/// (min = +inf, max = -inf).
struct GrayscaleSeparation {
  double textured_min = std::numeric_limits<double>::infinity();
  double textured_max = -std::numeric_limits<double>::infinity();
  double untextured_min = std::numeric_limits<double>::infinity();
  double untextured_max = -std::numeric_limits<double>::infinity();
  double mid = 0.5;
  bool textured_above = true;

  bool has_textured() const { return textured_min <= textured_max; }
  bool has_untextured() const { return untextured_min <= untextured_max; }
};

/// Measures exact gray ranges grouped by the face-id oracle and picks the
/// midpoint threshold between them.
inline GrayscaleSeparation measure_separation(const Image& mask_render, const FaceIdBuffer& face_ids, const Mesh& mesh) {
  require_same_shape(mask_render, face_ids, "measure_separation");
  GrayscaleSeparation s;
  for (int y = 0; y < face_ids.height; ++y) {
    for (int x = 0; x < face_ids.width; ++x) {
      const auto f = face_ids(x, y);
      if (f == kBackground) continue;
      const double g = mask_render.gray(x, y);
      if (mesh.is_textured(static_cast<std::size_t>(f))) {
        s.textured_min = std::min(s.textured_min, g);
        s.textured_max = std::max(s.textured_max, g);
      } else {
        s.untextured_min = std::min(s.untextured_min, g);
        s.untextured_max = std::max(s.untextured_max, g);
      }
    }
  }
  if (!s.has_textured() || !s.has_untextured()) {
    // One group is absent: any threshold beyond the present range separates.
    if (s.has_textured()) {
      s.mid = 0.5 * s.textured_min;
      s.textured_above = true;
    } else if (s.has_untextured()) {
      s.mid = 0.5 * (s.untextured_max + 1.0);
      s.textured_above = true;
    }
    return s;
  }
  if (s.textured_min >= s.untextured_max) {
    s.mid = 0.5 * (s.textured_min + s.untextured_max);
    s.textured_above = true;
  } else if (s.textured_max < s.untextured_min) {
    s.mid = 0.5 * (s.textured_max + s.untextured_min);
    s.textured_above = false;
  } else {
    throw SeparationError("dark-light separation violated: textured gray range [" + std::to_string(s.textured_min) +
                          ", " + std::to_string(s.textured_max) + "] intersects untextured range [" +
                          std::to_string(s.untextured_min) + ", " + std::to_string(s.untextured_max) + "]");
  }
  return s;
}

/// P(x, y) = 1 iff the pixel's gray level lies on the textured side of the
/// threshold (>= mid when textured is above). Background pixels are 0.
inline Mask binarize(const Image& mask_render, double mid, bool textured_above, const FaceIdBuffer& face_ids) {
  require_same_shape(mask_render, face_ids, "binarize");
  Mask p(face_ids.width, face_ids.height, 0);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      if (face_ids(x, y) == kBackground) continue;
      const double g = mask_render.gray(x, y);
      p(x, y) = (textured_above ? g >= mid : g < mid) ? 1 : 0;
    }
  }
  return p;
}

/// Mask of one pose together with the measurements that produced it.
struct PoseMask {
  Mask mask;
  FaceIdBuffer face_ids;
  GrayscaleSeparation separation;
};

/// render_dark + measure_separation + binarize for one pose.
inline PoseMask compute_pose_mask(const Mesh& mesh, const MaskMap& mask_map, const CameraPose& pose,
                                  const SceneConfig& scene = dark_light_scene()) {
  PoseMask pm;
  const Image dark = render_dark(mesh, mask_map, pose, scene);
  pm.face_ids = render_face_ids(mesh, pose);
  pm.separation = measure_separation(dark, pm.face_ids, mesh);
  pm.mask = binarize(dark, pm.separation.mid, pm.separation.textured_above, pm.face_ids);
  return pm;
}

/// Photometric transformations applied to the differentiable render.
struct EotConfig {
  double brightness = 0.1;    // offset b ~ U[-brightness, brightness]
  double contrast_min = 0.8;  // scale c ~ U[contrast_min, contrast_max]
  double contrast_max = 1.2;
  double noise_std = 0.02;
  std::uint64_t seed = 0;
};

inline void validate(const EotConfig& c) {
  if (!(c.contrast_min > 0.0 && c.contrast_max >= c.contrast_min)) throw Error("eot: contrast range must be positive");
  if (!(c.brightness >= 0.0)) throw Error("eot: brightness range must be >= 0");
  if (!(c.noise_std >= 0.0)) throw Error("eot: noise std must be >= 0");
}

struct EotParams {
  double brightness = 0.0;
  double contrast = 1.0;
  std::vector<double> noise;  // per pixel and channel; empty when noise_std == 0
};

/// Parameters of one EoT draw, a pure function of (seed, frame, draw).
inline EotParams sample_eot(const EotConfig& cfg, std::uint64_t frame, std::uint64_t draw, std::size_t values) {
  validate(cfg);
  Rng rng(derive_seed(cfg.seed, frame, draw));
  EotParams p;
  p.brightness = uniform(rng, -cfg.brightness, cfg.brightness);
  p.contrast = uniform(rng, cfg.contrast_min, cfg.contrast_max);
  if (cfg.noise_std > 0.0) {
    p.noise.resize(values);
    for (double& n : p.noise) n = cfg.noise_std * normal01(rng);
  }
  return p;
}

/// Per-value derivative of the EoT map: contrast on live masked values,
/// 1 outside the mask, 0 where the output was clamped.
struct EotTape {
  std::vector<double> slope;
};

inline std::pair<Image, EotTape> apply_eot(const Image& rendered, const Mask& mask, const EotParams& params) {
  require_same_shape(rendered, mask, "apply_eot");
  Image out = rendered;
  EotTape tape{std::vector<double>(rendered.data.size(), 1.0)};
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask.cells[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      const double v = params.contrast * rendered.data[i] + params.brightness + (params.noise.empty() ? 0.0 : params.noise[i]);
      out.data[i] = clamp01(v);
      tape.slope[i] = (v >= 0.0 && v <= 1.0) ? params.contrast : 0.0;
    }
  }
  return {std::move(out), std::move(tape)};
}

inline std::pair<Image, EotTape> apply_eot(const Image& rendered, const Mask& mask, const EotConfig& cfg,
                                           std::uint64_t frame, std::uint64_t draw) {
  return apply_eot(rendered, mask, sample_eot(cfg, frame, draw, rendered.data.size()));
}

inline Image apply_eot_vjp(const EotTape& tape, const Image& cotangent) {
  if (cotangent.data.size() != tape.slope.size()) throw ShapeError("apply_eot_vjp: cotangent shape mismatch");
  Image g = cotangent;
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= tape.slope[i];
  return g;
}

/// I_o = I_d' * P + I_p * (1 - P), elementwise.
inline Image compose(const Image& transformed, const Image& reference, const Mask& mask) {
  require_same_shape(transformed, reference, "compose");
  require_same_shape(transformed, mask, "compose");
  Image out = reference;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask.cells[p]) continue;
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = transformed.data[p * 3 + c];
  }
  return out;
}

/// Cotangent routed to I_d' where P = 1; the reference image is constant data.
inline Image compose_vjp(const Mask& mask, const Image& cotangent) {
  require_same_shape(cotangent, mask, "compose_vjp");
  Image g(cotangent.width, cotangent.height, 0.0);
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask.cells[p]) continue;
    for (int c = 0; c < 3; ++c) g.data[p * 3 + c] = cotangent.data[p * 3 + c];
  }
  return g;
}

}  // namespace camo
