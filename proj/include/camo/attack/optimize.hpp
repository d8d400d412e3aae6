#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "camo/attack/losses.hpp"
#include "camo/composer/composer.hpp"
#include "camo/core/adam.hpp"
#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/diff_render.hpp"
#include "camo/victim/detector.hpp"

namespace camo {

/// Lighting of the differentiable render I_d.
enum class DrLighting {
  frame_scene,  // the frame's ambient and directional lights (Lambertian only)
  dark_light,   // the ambient-only mask scene
};

struct AttackConfig {
  double lr = 0.015;
  int epochs = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool plain_sgd = false;
  int eot_draws = 1;
  EotConfig eot;
  std::uint64_t seed = 0;
  double clamp_min = 0.0;
  double clamp_max = 1.0;
  bool shuffle = false;
  DrLighting dr_lighting = DrLighting::dark_light;
  MaskMapSpec mask_spec;
};

inline void validate(const AttackConfig& c) {
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) throw Error("attack config: lr must be finite and >= 0");
  if (c.epochs < 1) throw Error("attack config: epochs must be >= 1");
  if (c.eot_draws < 1) throw Error("attack config: eot_draws must be >= 1");
  if (!(c.clamp_min < c.clamp_max)) throw Error("attack config: clamp bounds must satisfy min < max");
  validate(c.eot);
  validate(c.mask_spec);
}

/// One pre-rendered view: the reference image I_p, its pose and scene.
struct AttackFrame {
  CameraPose pose;
  SceneConfig scene;
  Image reference;
  int scene_id = 0;
};

struct FrameGradient {
  LossReport loss;
  Image texture_gradient;  // d total / d texel, smoothing term included
  Image composite;         // I_o of the last EoT draw
};

/// Loss and texture gradient of one frame, averaged over EoT draws with keys
/// (seed, frame_key, first_draw + k).
inline FrameGradient frame_gradient(const Mesh& mesh, const TextureMap& texture, const AttackFrame& frame,
                                    const Mask& pose_mask, const DetectorWeights& weights, const LossConfig& loss_cfg,
                                    const AttackConfig& cfg, std::uint64_t frame_key, std::uint64_t first_draw) {
  require_same_shape(frame.reference, pose_mask, "attack frame mask");
  const SceneConfig dr_scene = cfg.dr_lighting == DrLighting::frame_scene ? frame.scene : dark_light_scene();
  auto [rendered, tape] = render_diff(mesh, texture, frame.pose, dr_scene);
  FrameGradient fg{{}, Image(texture.width(), texture.height(), 0.0), {}};
  double l1 = 0.0, l2 = 0.0;
  const double inv = 1.0 / cfg.eot_draws;
  Image image_cot(rendered.width, rendered.height, 0.0);
  for (int k = 0; k < cfg.eot_draws; ++k) {
    auto [transformed, eot_tape] = apply_eot(rendered, pose_mask, cfg.eot, frame_key, first_draw + k);
    fg.composite = compose(transformed, frame.reference, pose_mask);
    auto [out, det_tape] = detector_forward(weights, fg.composite);
    const ScoreLoss a = loss_objectness(out, loss_cfg);
    const ScoreLoss b = loss_class(out, loss_cfg);
    l1 += a.value * inv;
    l2 += b.value * inv;
    const Image g = apply_eot_vjp(eot_tape, compose_vjp(pose_mask, detector_input_vjp(det_tape, detector_cotangent(a, b, loss_cfg))));
    for (std::size_t i = 0; i < g.data.size(); ++i) image_cot.data[i] += g.data[i] * inv;
  }
  fg.texture_gradient = render_diff_vjp(tape, image_cot);
  const SmoothLoss s = loss_smooth(texture.image, texture.texel_mask);
  for (std::size_t i = 0; i < s.gradient.data.size(); ++i) fg.texture_gradient.data[i] += loss_cfg.gamma * s.gradient.data[i];
  fg.loss = total_loss(l1, l2, s.value, loss_cfg);
  return fg;
}

struct AttackStep {
  long step = 0;
  int epoch = 0;
  std::size_t frame = 0;
  LossReport loss;
};

struct AttackResult {
  TextureMap texture;
  std::vector<AttackStep> log;
};

inline std::string describe(const CameraPose& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(r=%g, theta=%g, phi=%g)", p.r, p.theta, p.phi);
  return buf;
}

/// Dark-light masks of every frame; aborts naming the first inseparable pose.
inline std::vector<Mask> attack_masks(const Mesh& mesh, const TextureMap& initial, const std::vector<AttackFrame>& frames,
                                      const MaskMapSpec& spec) {
  const MaskMap mask_map = make_mask_map(spec, initial.texel_mask);
  std::vector<Mask> masks;
  masks.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      masks.push_back(compute_pose_mask(mesh, mask_map, frames[i].pose).mask);
    } catch (const SeparationError& e) {
      throw SeparationError("frame " + std::to_string(i) + " pose " + describe(frames[i].pose) + ": " + e.what());
    }
  }
  return masks;
}

/// Generates T_adv: per frame, render, transform, compose, detect, and take
/// one moment-based step on the masked texels, clamped to the bounds.
inline AttackResult optimize_texture(const Mesh& mesh, const TextureMap& initial, const std::vector<AttackFrame>& frames,
                                     const DetectorWeights& weights, const LossConfig& loss_cfg, const AttackConfig& cfg,
                                     const std::function<void(const AttackStep&)>& on_step = {}) {
  validate(cfg);
  validate(loss_cfg);
  if (frames.empty()) throw Error("optimize_texture: dataset is empty");
  for (const auto& f : frames) {
    if (f.reference.width != weights.descriptor.input_size || f.reference.height != weights.descriptor.input_size) {
      throw ShapeError("optimize_texture: frame size does not match the detector input size");
    }
  }
  const std::vector<Mask> masks = attack_masks(mesh, initial, frames, cfg.mask_spec);

  AttackResult res{initial, {}};
  std::vector<std::uint8_t> active(initial.image.data.size(), 0);
  for (std::size_t p = 0; p < initial.texel_mask.size(); ++p)
    for (int c = 0; c < 3; ++c) active[p * 3 + c] = initial.texel_mask.cells[p];
  Adam opt(active.size(), AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.plain_sgd});

  std::vector<std::size_t> order(frames.size());
  long step = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (cfg.shuffle) {
      Rng rng(derive_seed(cfg.seed, 0xA77AC, static_cast<std::uint64_t>(e)));
      shuffle(order, rng);
    }
    for (std::size_t idx : order) {
      const FrameGradient fg =
          frame_gradient(mesh, res.texture, frames[idx], masks[idx], weights, loss_cfg, cfg, idx,
                         static_cast<std::uint64_t>(e) * static_cast<std::uint64_t>(cfg.eot_draws));
      for (double g : fg.texture_gradient.data)
        if (!std::isfinite(g)) throw NumericError("optimize_texture: non-finite gradient at step " + std::to_string(step));
      if (cfg.lr > 0.0) {
        opt.step(res.texture.image.data.data(), fg.texture_gradient.data.data(), &active);
        for (std::size_t i = 0; i < active.size(); ++i)
          if (active[i]) res.texture.image.data[i] = std::clamp(res.texture.image.data[i], cfg.clamp_min, cfg.clamp_max);
      }
      res.log.push_back({step, e, idx, fg.loss});
      if (on_step) on_step(res.log.back());
      ++step;
    }
  }
  return res;
}

/// CSV columns: step, epoch, frame, l1, l2, l_a, l_s, total.
inline void write_loss_log(const std::vector<AttackStep>& log, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "step,epoch,frame,l1,l2,l_a,l_s,total\n";
  char buf[256];
  for (const auto& s : log) {
    std::snprintf(buf, sizeof buf, "%ld,%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.step, s.epoch, s.frame, s.loss.l1,
                  s.loss.l2, s.loss.l_a, s.loss.l_s, s.loss.total);
    f << buf;
  }
  if (!f) throw IoError("failed writing " + path.string());
}

/// Mean total loss of each epoch.
inline std::vector<double> epoch_means(const std::vector<AttackStep>& log) {
  std::vector<double> sum, n;
  for (const auto& s : log) {
    if (static_cast<std::size_t>(s.epoch) >= sum.size()) {
      sum.resize(s.epoch + 1, 0.0);
      n.resize(s.epoch + 1, 0.0);
    }
    sum[s.epoch] += s.loss.total;
    n[s.epoch] += 1.0;
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= std::max(1.0, n[i]);
  return sum;
}

}  // namespace camo
