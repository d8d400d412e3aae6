#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "camo/core/adam.hpp"
#include "camo/core/box.hpp"
#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/core/random.hpp"
#include "camo/render/camera.hpp"
#include "camo/victim/detector.hpp"

namespace camo {

/// Supervision for every grid cell of one frame.
struct CellTargets {
  std::vector<std::uint8_t> positive;       // cell holds an object center
  std::vector<int> label;                   // class of every cell
  std::vector<std::array<double, 4>> box;   // (fx, fy, log w/anchor, log h/anchor) on positives
};

/// What a frame shows, in pixel coordinates of the detector input.
struct FrameLabels {
  CameraPose pose;
  std::optional<Box> car;
  std::vector<LabeledBox> objects;
  bool ground_enabled = true;
  double ground_height = 0.0;
};

/// Positive cells hold an object's box center (the car wins ties). Every
/// other cell takes the class under its center: car or distractor when inside
/// that box, else ground when the camera ray through it meets the ground
/// plane, else background.
inline CellTargets make_targets(const DetectorDescriptor& d, const FrameLabels& f) {
  const int s = d.grid(), cells = s * s;
  const double stride = d.stride();
  const double sx = static_cast<double>(d.input_size) / f.pose.width, sy = static_cast<double>(d.input_size) / f.pose.height;
  CellTargets t{std::vector<std::uint8_t>(cells, 0), std::vector<int>(cells, static_cast<int>(ObjectClass::background)),
                std::vector<std::array<double, 4>>(cells, {0.5, 0.5, 0.0, 0.0})};

  std::vector<LabeledBox> objects;
  if (f.car) objects.push_back({ObjectClass::car, *f.car});
  objects.insert(objects.end(), f.objects.begin(), f.objects.end());
  for (auto& o : objects) o.box = {o.box.x0 * sx, o.box.y0 * sy, o.box.x1 * sx, o.box.y1 * sy};

  const ViewTransform view = camera_from_spherical(f.pose);
  for (int c = 0; c < cells; ++c) {
    const double px = (c % s + 0.5) * stride, py = (c / s + 0.5) * stride;
    int label = static_cast<int>(ObjectClass::background);
    bool inside = false;
    for (const auto& o : objects) {
      if (px >= o.box.x0 && px < o.box.x1 && py >= o.box.y0 && py < o.box.y1) {
        label = static_cast<int>(o.label);
        inside = true;
        break;
      }
    }
    if (!inside && f.ground_enabled) {
      const Ray r = view.ray(px / sx, py / sy);
      if (r.dir.y() < 0.0 && (f.ground_height - r.origin.y()) / r.dir.y() > 0.0) label = static_cast<int>(ObjectClass::ground);
    }
    t.label[c] = label;
  }
  for (const auto& o : objects) {
    const int col = std::clamp(static_cast<int>(std::floor(o.box.cx() / stride)), 0, s - 1);
    const int row = std::clamp(static_cast<int>(std::floor(o.box.cy() / stride)), 0, s - 1);
    const int c = row * s + col;
    if (t.positive[c]) continue;
    t.positive[c] = 1;
    t.label[c] = static_cast<int>(o.label);
    t.box[c] = {std::clamp(o.box.cx() / stride - col, 1e-3, 1.0 - 1e-3), std::clamp(o.box.cy() / stride - row, 1e-3, 1.0 - 1e-3),
                std::log(std::max(o.box.width(), 1.0) / d.anchor), std::log(std::max(o.box.height(), 1.0) / d.anchor)};
  }
  return t;
}

/// Mirror of the targets for a horizontally flipped input.
inline CellTargets flip_targets(const CellTargets& t, int s) {
  CellTargets f = t;
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      const int a = r * s + c, b = r * s + (s - 1 - c);
      f.positive[b] = t.positive[a];
      f.label[b] = t.label[a];
      f.box[b] = t.box[a];
      f.box[b][0] = 1.0 - t.box[a][0];
    }
  }
  return f;
}

struct TrainConfig {
  int epochs = 30;
  double lr = 2e-3;
  int batch = 8;
  std::uint64_t seed = 1;
  double positive_weight = 4.0;  // objectness BCE weight on positive cells
  double class_weight = 1.0;
  double box_weight = 5.0;
  bool flip = true;              // random horizontal flips
  double brightness_jitter = 0.1;
  double contrast_jitter = 0.15;
};

inline void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw Error("train: epochs must be >= 1");
  if (!(c.lr > 0.0)) throw Error("train: lr must be > 0");
  if (c.batch < 1) throw Error("train: batch must be >= 1");
}

struct TrainSample {
  Image8 image;
  CellTargets targets;
};

struct LossParts {
  double objectness = 0.0;
  double classification = 0.0;
  double box = 0.0;
  double total() const { return objectness + classification + box; }
};

/// Objectness BCE (positive cells up-weighted) and class cross-entropy, both
/// averaged over all cells, plus box L2 averaged over positive cells.
/// Writes d(loss)/d(head logits) into `grad` when given.
inline LossParts detection_loss(const DetectorDescriptor& d, const DetectorOutput& out, const CellTargets& t,
                                const TrainConfig& cfg, Eigen::MatrixXd* grad = nullptr) {
  const int cells = d.grid() * d.grid(), nc = d.num_classes;
  int npos = 0;
  for (auto p : t.positive) npos += p;
  if (grad) *grad = Eigen::MatrixXd::Zero(d.head_channels(), cells);
  LossParts loss;
  for (int c = 0; c < cells; ++c) {
    const double z = out.raw(0, c);
    const double y = t.positive[c] ? 1.0 : 0.0;
    const double w = t.positive[c] ? cfg.positive_weight : 1.0;
    // log(1 + exp(z)) - y z, stable.
    const double bce = std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    loss.objectness += w * bce / cells;
    const Proposal& p = out.proposals[c];
    loss.classification += -cfg.class_weight * std::log(std::max(p.class_conf[t.label[c]], 1e-300)) / cells;
    if (grad) {
      (*grad)(0, c) = w * (p.objectness - y) / cells;
      for (int k = 0; k < nc; ++k) (*grad)(1 + k, c) = cfg.class_weight * (p.class_conf[k] - (k == t.label[c] ? 1.0 : 0.0)) / cells;
    }
    if (!t.positive[c]) continue;
    for (int k = 0; k < 4; ++k) {
      const double raw = out.raw(1 + nc + k, c);
      const double v = k < 2 ? sigmoid(raw) : raw;
      const double r = v - t.box[c][k];
      loss.box += cfg.box_weight * r * r / npos;
      if (grad) (*grad)(1 + nc + k, c) = cfg.box_weight * 2.0 * r * (k < 2 ? v * (1.0 - v) : 1.0) / npos;
    }
  }
  return loss;
}

/// Flattened double copy of all parameters, layer by layer (weight, bias).
inline std::vector<double> flatten(const DetectorWeights& w) {
  std::vector<double> x;
  x.reserve(w.parameter_count());
  for (const auto& l : w.layers) {
    x.insert(x.end(), l.weight.begin(), l.weight.end());
    x.insert(x.end(), l.bias.begin(), l.bias.end());
  }
  return x;
}

inline void unflatten(const std::vector<double>& x, DetectorWeights& w) {
  std::size_t i = 0;
  for (auto& l : w.layers) {
    for (float& v : l.weight) v = static_cast<float>(x[i++]);
    for (float& v : l.bias) v = static_cast<float>(x[i++]);
  }
}

/// Adds grads (Eigen layout: out x fan_in, row-major flattening) into a flat vector.
inline void accumulate(const WeightGradients& g, const DetectorWeights& w, std::vector<double>& flat) {
  std::size_t i = 0;
  for (std::size_t li = 0; li < w.layers.size(); ++li) {
    const ConvLayer& l = w.layers[li];
    for (int o = 0; o < l.out_channels; ++o)
      for (int k = 0; k < l.fan_in(); ++k) flat[i++] += g.weight[li](o, k);
    for (int o = 0; o < l.out_channels; ++o) flat[i++] += g.bias[li][o];
  }
}

/// Photometric jitter and optional flip applied to one training image.
inline Image augment(const Image8& src, bool flip, double brightness, double contrast) {
  Image img = src.to_image();
  if (flip) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width / 2; ++x)
        for (int c = 0; c < 3; ++c) std::swap(img.at(x, y, c), img.at(img.width - 1 - x, y, c));
  }
  for (double& v : img.data) v = clamp01((v - 0.5) * contrast + 0.5 + brightness);
  return img;
}

struct EpochLog {
  int epoch = 0;
  LossParts mean;
};

struct TrainResult {
  DetectorWeights weights;
  std::vector<EpochLog> epochs;
};

/// Minibatch Adam on detection_loss. Deterministic given the seed: batch
/// order and augmentation come from seed-derived streams and gradients are
/// summed in sample order.
inline TrainResult train_victim(const DetectorDescriptor& d, const std::vector<TrainSample>& samples, const TrainConfig& cfg,
                                const std::function<void(const EpochLog&)>& on_epoch = {}) {
  validate(cfg);
  if (samples.empty()) throw Error("train: no training samples");
  TrainResult res{init_weights(d, cfg.seed), {}};
  std::vector<double> x = flatten(res.weights);
  Adam opt(x.size(), AdamConfig{cfg.lr});
  std::vector<std::size_t> order(samples.size());
  std::vector<double> g(x.size());
  for (int e = 0; e < cfg.epochs; ++e) {
    Rng rng(derive_seed(cfg.seed, 0x7A11, static_cast<std::uint64_t>(e)));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    LossParts sum;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const TrainSample& s = samples[order[k]];
        const bool flip = cfg.flip && (rng() & 1u);
        const double b = uniform(rng, -cfg.brightness_jitter, cfg.brightness_jitter);
        const double c = uniform(rng, 1.0 - cfg.contrast_jitter, 1.0 + cfg.contrast_jitter);
        const Image img = augment(s.image, flip, b, c);
        const CellTargets t = flip ? flip_targets(s.targets, d.grid()) : s.targets;
        auto [out, tape] = detector_forward(res.weights, img);
        Eigen::MatrixXd head;
        const LossParts l = detection_loss(d, out, t, cfg, &head);
        if (!std::isfinite(l.total())) throw NumericError("train: non-finite loss at epoch " + std::to_string(e));
        sum.objectness += l.objectness;
        sum.classification += l.classification;
        sum.box += l.box;
        WeightGradients wg;
        backward_from_logits(tape, head, &wg);
        accumulate(wg, res.weights, g);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& v : g) v *= inv;
      opt.step(x.data(), g.data());
      unflatten(x, res.weights);
    }
    const double n = static_cast<double>(samples.size());
    EpochLog log{e, {sum.objectness / n, sum.classification / n, sum.box / n}};
    if (!std::isfinite(log.mean.total())) throw NumericError("train: non-finite loss at epoch " + std::to_string(e));
    res.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return res;
}

}  // namespace camo
