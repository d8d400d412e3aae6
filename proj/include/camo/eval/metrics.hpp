#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "camo/core/box.hpp"
#include "camo/core/error.hpp"
#include "camo/victim/detector.hpp"

namespace camo {

/// Detections of one frame with its ground truth.
struct FrameDetections {
  std::vector<Detection> detections;
  std::optional<Box> truth;
};

struct EvalThresholds {
  double confidence = 0.5;  // a detection counts when confidence > this (strict)
  double iou = 0.5;         // and IoU with the truth >= this
  int target_class = static_cast<int>(ObjectClass::car);
};

inline void validate(const EvalThresholds& t) {
  if (!(t.confidence > 0.0 && t.confidence < 1.0)) throw Error("eval: confidence threshold must lie in (0,1)");
  if (!(t.iou > 0.0 && t.iou < 1.0)) throw Error("eval: iou threshold must lie in (0,1)");
}

/// Target-class detections above the confidence threshold, highest first.
inline std::vector<Detection> predicted_positives(const FrameDetections& f, const EvalThresholds& t) {
  std::vector<Detection> out;
  for (const auto& d : f.detections)
    if (d.label == t.target_class && d.confidence > t.confidence) out.push_back(d);
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return out;
}

struct FrameResult {
  bool detected = false;     // a predicted positive matched the truth
  double best_iou = 0.0;     // over predicted positives
  double best_confidence = 0.0;
  int predicted = 0;
  int true_positives = 0;
};

inline FrameResult evaluate_frame(const FrameDetections& f, const EvalThresholds& t) {
  FrameResult r;
  const auto pos = predicted_positives(f, t);
  r.predicted = static_cast<int>(pos.size());
  for (const auto& d : pos) {
    r.best_confidence = std::max(r.best_confidence, d.confidence);
    if (!f.truth) continue;
    const double v = iou(d.box, *f.truth);
    r.best_iou = std::max(r.best_iou, v);
    if (!r.detected && v >= t.iou) {
      r.detected = true;
      r.true_positives = 1;
    }
  }
  return r;
}

struct PrecisionResult {
  double value = 0.0;
  long true_positives = 0;
  long predicted = 0;
  bool no_predictions = false;
};

/// True positives over predicted positives; each truth matches at most one
/// detection, taken in descending confidence.
inline PrecisionResult precision_at_iou(const std::vector<FrameDetections>& frames, const EvalThresholds& t = {}) {
  validate(t);
  PrecisionResult p;
  for (const auto& f : frames) {
    const FrameResult r = evaluate_frame(f, t);
    p.true_positives += r.true_positives;
    p.predicted += r.predicted;
  }
  p.no_predictions = p.predicted == 0;
  p.value = p.no_predictions ? 0.0 : static_cast<double>(p.true_positives) / static_cast<double>(p.predicted);
  return p;
}

/// Fraction of frames in which no target-class detection is valid.
inline double attack_success_rate(const std::vector<FrameDetections>& frames, const EvalThresholds& t = {}) {
  validate(t);
  if (frames.empty()) throw Error("attack_success_rate: no frames");
  long ok = 0;
  for (const auto& f : frames) ok += evaluate_frame(f, t).detected ? 0 : 1;
  return static_cast<double>(ok) / static_cast<double>(frames.size());
}

struct EvalReport {
  std::string texture_id;
  std::string detector_id;
  double p_at_05 = 0.0;
  bool no_predictions = false;
  double asr = 0.0;
  std::optional<double> a_physical;
  std::vector<FrameResult> frames;
};

inline EvalReport evaluate_frames(const std::vector<FrameDetections>& frames, const EvalThresholds& t = {}) {
  EvalReport r;
  const PrecisionResult p = precision_at_iou(frames, t);
  r.p_at_05 = p.value;
  r.no_predictions = p.no_predictions;
  r.asr = attack_success_rate(frames, t);
  for (const auto& f : frames) r.frames.push_back(evaluate_frame(f, t));
  return r;
}

struct SequenceEvalReport {
  long f_d = 0;
  long f_o = 0;
  double a_physical() const { return f_o == 0 ? 0.0 : static_cast<double>(f_d) / static_cast<double>(f_o); }
};

}  // namespace camo
