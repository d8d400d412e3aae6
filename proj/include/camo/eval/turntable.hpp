#pragma once

#include <vector>

#include "camo/core/error.hpp"
#include "camo/eval/metrics.hpp"
#include "camo/geometry/mesh.hpp"
#include "camo/render/reference.hpp"
#include "camo/victim/detector.hpp"

namespace camo {

struct TurntableFrame {
  CameraPose pose;
  FrameResult result;
};

struct TurntableResult {
  SequenceEvalReport report;
  std::vector<TurntableFrame> frames;
};

/// Renders `frames` equally spaced azimuths of `pose_template` (phi starts at
/// the template's value) and counts the frames with a valid car detection.
inline TurntableResult turntable_sweep(const Mesh& mesh, const TextureMap& texture, const DetectorWeights& weights,
                                       int frames = 90, const CameraPose& pose_template = {}, const SceneConfig& scene = {},
                                       const EvalThresholds& thresholds = {}, double nms_iou = 0.5) {
  if (frames < 8) throw Error("turntable: frames must be >= 8");
  validate(thresholds);
  TurntableResult res;
  res.report.f_o = frames;
  for (int i = 0; i < frames; ++i) {
    CameraPose p = pose_template;
    p.phi = pose_template.phi + 360.0 * i / frames;
    const ReferenceFrame f = render_ref(mesh, texture, p, scene);
    auto [out, tape] = detector_forward(weights, f.image);
    const FrameResult r = evaluate_frame({decode_detections(out, thresholds.confidence, nms_iou), f.box}, thresholds);
    res.report.f_d += r.detected ? 1 : 0;
    res.frames.push_back({p, r});
  }
  return res;
}

inline SequenceEvalReport turntable_accuracy(const Mesh& mesh, const TextureMap& texture, const DetectorWeights& weights,
                                             int frames = 90, const CameraPose& pose_template = {},
                                             const SceneConfig& scene = {}, const EvalThresholds& thresholds = {}) {
  return turntable_sweep(mesh, texture, weights, frames, pose_template, scene, thresholds).report;
}

}  // namespace camo
