#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "camo/core/box.hpp"
#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/victim/detector.hpp"

namespace camo {

struct LossConfig {
  double beta = 1.0;
  double gamma = 0.5;
  int target_class = static_cast<int>(ObjectClass::car);
  double tau_attack = 0.5;
  int fallback_k = 1;
};

inline void validate(const LossConfig& c) {
  if (!(c.beta >= 0.0)) throw Error("loss config: beta must be >= 0");
  if (!(c.gamma >= 0.0)) throw Error("loss config: gamma must be >= 0");
  if (!(c.tau_attack > 0.0 && c.tau_attack < 1.0)) throw Error("loss config: tau_attack must lie in (0,1)");
  if (c.fallback_k < 1) throw Error("loss config: fallback_k must be >= 1");
  if (c.target_class < 0) throw Error("loss config: target_class must be >= 0");
}

/// A scalar loss with its cotangents on the detector scores.
struct ScoreLoss {
  double value = 0.0;
  ScoreCotangents cotangent;
  std::vector<int> selected;  // proposals that entered the mean
};

/// Proposals entering L1: objectness >= tau_attack (before suppression), or
/// the top fallback_k by objectness when none qualifies.
inline std::vector<int> select_boxes(const DetectorOutput& out, const LossConfig& cfg) {
  std::vector<int> sel;
  for (const auto& p : out.proposals)
    if (p.objectness >= cfg.tau_attack) sel.push_back(p.cell);
  if (!sel.empty()) return sel;
  std::vector<int> order(out.proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return out.proposals[a].objectness > out.proposals[b].objectness; });
  order.resize(std::min(order.size(), static_cast<std::size_t>(cfg.fallback_k)));
  return order;
}

inline ScoreCotangents zero_cotangents(const DetectorOutput& out) {
  const std::size_t cells = out.proposals.size();
  const std::size_t nc = cells ? out.proposals[0].class_conf.size() : 0;
  return {std::vector<double>(cells, 0.0), std::vector<double>(cells * nc, 0.0)};
}

/// L1: mean objectness of the selected boxes.
inline ScoreLoss loss_objectness(const DetectorOutput& out, const LossConfig& cfg) {
  validate(cfg);
  ScoreLoss l{0.0, zero_cotangents(out), select_boxes(out, cfg)};
  if (l.selected.empty()) return l;
  const double inv = 1.0 / static_cast<double>(l.selected.size());
  for (int c : l.selected) {
    l.value += out.proposals[c].objectness * inv;
    l.cotangent.objectness[c] = inv;
  }
  return l;
}

/// L2: mean target-class confidence over all proposals.
inline ScoreLoss loss_class(const DetectorOutput& out, const LossConfig& cfg) {
  validate(cfg);
  ScoreLoss l{0.0, zero_cotangents(out), {}};
  if (out.proposals.empty()) return l;
  const std::size_t nc = out.proposals[0].class_conf.size();
  if (static_cast<std::size_t>(cfg.target_class) >= nc) throw Error("loss_class: target class out of range");
  const double inv = 1.0 / static_cast<double>(out.proposals.size());
  for (const auto& p : out.proposals) {
    l.value += p.class_conf[cfg.target_class] * inv;
    l.cotangent.class_conf[static_cast<std::size_t>(p.cell) * nc + cfg.target_class] = inv;
    l.selected.push_back(p.cell);
  }
  return l;
}

struct SmoothLoss {
  double value = 0.0;
  Image gradient;
};

/// Sum over right and down neighbor pairs of squared differences, all
/// channels; pairs with a texel outside the mask or the map are dropped.
inline SmoothLoss loss_smooth(const Image& texture, const Mask& texel_mask) {
  require_same_shape(texture, texel_mask, "loss_smooth");
  SmoothLoss l{0.0, Image(texture.width, texture.height, 0.0)};
  auto pair = [&](int x0, int y0, int x1, int y1) {
    if (!texel_mask(x0, y0) || !texel_mask(x1, y1)) return;
    for (int c = 0; c < 3; ++c) {
      const double d = texture.at(x0, y0, c) - texture.at(x1, y1, c);
      l.value += d * d;
      l.gradient.at(x0, y0, c) += 2.0 * d;
      l.gradient.at(x1, y1, c) -= 2.0 * d;
    }
  };
  for (int y = 0; y < texture.height; ++y) {
    for (int x = 0; x < texture.width; ++x) {
      if (x + 1 < texture.width) pair(x, y, x + 1, y);
      if (y + 1 < texture.height) pair(x, y, x, y + 1);
    }
  }
  return l;
}

struct LossReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double l_a = 0.0;
  double l_s = 0.0;
  double total = 0.0;
};

/// L_a = L1 + beta L2 and L = L_a + gamma L_s.
inline LossReport total_loss(double l1, double l2, double l_s, const LossConfig& cfg) {
  validate(cfg);
  if (!std::isfinite(l1)) throw NumericError("total_loss: l1 is not finite");
  if (!std::isfinite(l2)) throw NumericError("total_loss: l2 is not finite");
  if (!std::isfinite(l_s)) throw NumericError("total_loss: l_s is not finite");
  LossReport r{l1, l2, 0.0, l_s, 0.0};
  r.l_a = l1 + cfg.beta * l2;
  r.total = r.l_a + cfg.gamma * l_s;
  return r;
}

/// cot1 + beta * cot2.
inline ScoreCotangents detector_cotangent(const ScoreLoss& l1, const ScoreLoss& l2, const LossConfig& cfg) {
  ScoreCotangents c = l1.cotangent;
  for (std::size_t i = 0; i < c.objectness.size(); ++i) c.objectness[i] += cfg.beta * l2.cotangent.objectness[i];
  for (std::size_t i = 0; i < c.class_conf.size(); ++i) c.class_conf[i] += cfg.beta * l2.cotangent.class_conf[i];
  return c;
}

}  // namespace camo
