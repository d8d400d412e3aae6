#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "camo/attack/losses.hpp"
#include "camo/attack/optimize.hpp"
#include "camo/render/reference.hpp"
#include "support.hpp"

using namespace camo;
using namespace camo::test;

namespace {

DetectorOutput with_scores(const std::vector<double>& objectness, const std::vector<double>& car_conf) {
  DetectorOutput out;
  out.grid = 1;
  for (std::size_t i = 0; i < objectness.size(); ++i) {
    const double c = car_conf.empty() ? 0.25 : car_conf[i];
    out.proposals.push_back({static_cast<int>(i), Box{}, objectness[i], {c, (1 - c) / 3, (1 - c) / 3, (1 - c) / 3}});
  }
  return out;
}

DetectorOutput random_output(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> o(n), c(n);
  for (int i = 0; i < n; ++i) {
    o[i] = u(rng);
    c[i] = u(rng);
  }
  return with_scores(o, c);
}

DetectorDescriptor attack_descriptor() {
  DetectorDescriptor d;
  d.input_size = 64;
  return d;
}

std::vector<AttackFrame> car_frames(int n, int size = 64) {
  const Mesh m = fixtures::car();
  const TextureMap t0 = random_texture(m, 64, 64, 40);
  std::vector<AttackFrame> frames;
  for (int i = 0; i < n; ++i) {
    const CameraPose p = car_pose(30 + 10 * (i % 3), 360.0 * i / n, size, 8.0);
    const SceneConfig s = lit_scene();
    frames.push_back({p, s, render_ref(m, t0, p, s).image, 0});
  }
  return frames;
}

AttackConfig quick_attack(int epochs = 2) {
  AttackConfig c;
  c.epochs = epochs;
  c.lr = 0.02;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(LossObjectness, MeanOverBoxesAboveThreshold) {
  const ScoreLoss l = loss_objectness(with_scores({0.9, 0.7, 0.2}, {}), LossConfig{});
  EXPECT_NEAR(l.value, 0.8, 1e-15);
  EXPECT_EQ(l.selected, (std::vector<int>{0, 1}));
  EXPECT_EQ(l.cotangent.objectness, (std::vector<double>{0.5, 0.5, 0.0}));
}

TEST(LossObjectness, FallsBackToTopK) {
  LossConfig cfg;
  cfg.fallback_k = 1;
  EXPECT_NEAR(loss_objectness(with_scores({0.1, 0.3, 0.2}, {}), cfg).value, 0.3, 1e-15);
  cfg.fallback_k = 2;
  EXPECT_NEAR(loss_objectness(with_scores({0.1, 0.3, 0.2}, {}), cfg).value, 0.25, 1e-15);
}

TEST(LossObjectness, MatchesEnumerationOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    const DetectorOutput out = random_output(rng, 1 + trial % 40);
    LossConfig cfg;
    cfg.tau_attack = u(rng);
    cfg.fallback_k = 1 + trial % 3;
    std::vector<double> above;
    for (const auto& p : out.proposals)
      if (p.objectness >= cfg.tau_attack) above.push_back(p.objectness);
    if (above.empty()) {
      std::vector<double> all;
      for (const auto& p : out.proposals) all.push_back(p.objectness);
      std::sort(all.rbegin(), all.rend());
      above.assign(all.begin(), all.begin() + std::min<std::size_t>(all.size(), cfg.fallback_k));
    }
    double expect = 0;
    for (double v : above) expect += v;
    expect /= above.size();
    const ScoreLoss l = loss_objectness(out, cfg);
    EXPECT_NEAR(l.value, expect, 1e-12);
    EXPECT_GE(l.value, 0.0);
    EXPECT_LE(l.value, 1.0);
    double cot_sum = 0;
    for (double c : l.cotangent.objectness) cot_sum += c;
    EXPECT_NEAR(cot_sum, 1.0, 1e-12);
  }
}

TEST(LossClass, ConstantConfidence) {
  EXPECT_NEAR(loss_class(with_scores({0.5, 0.5, 0.5}, {0.25, 0.25, 0.25}), LossConfig{}).value, 0.25, 1e-15);
}

TEST(LossClass, OneHotOverFourProposals) {
  const ScoreLoss l = loss_class(with_scores({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0}), LossConfig{});
  EXPECT_NEAR(l.value, 0.25, 1e-15);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(l.cotangent.class_conf[c * 4], 0.25);
}

TEST(LossClass, MatchesEnumerationOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const DetectorOutput out = random_output(rng, 1 + trial % 50);
    double expect = 0;
    for (const auto& p : out.proposals) expect += p.class_conf[0];
    expect /= out.proposals.size();
    EXPECT_NEAR(loss_class(out, LossConfig{}).value, expect, 1e-12);
  }
}

TEST(LossSmooth, ConstantTextureIsZero) {
  const SmoothLoss l = loss_smooth(Image(8, 8, 0.4), Mask(8, 8, 1));
  EXPECT_EQ(l.value, 0.0);
  for (double g : l.gradient.data) EXPECT_EQ(g, 0.0);
}

TEST(LossSmooth, TwoByTwoHandEnumeration) {
  Image t(2, 2, 0.0);
  t.at(1, 0, 0) = 1.0;
  t.at(1, 1, 0) = 1.0;
  EXPECT_NEAR(loss_smooth(t, Mask(2, 2, 1)).value, 2.0, 1e-15);
}

TEST(LossSmooth, PairsLeavingTheMaskAreDropped) {
  Image t(2, 2, 0.0);
  t.at(1, 0, 0) = 1.0;
  t.at(1, 1, 0) = 1.0;
  Mask m(2, 2, 1);
  m(1, 1) = 0;
  EXPECT_NEAR(loss_smooth(t, m).value, 1.0, 1e-15);
}

TEST(LossSmooth, ConstantPerMaskedRegionIsZero) {
  Image t(6, 4, 0.0);
  Mask m(6, 4, 1);
  for (int y = 0; y < 4; ++y) {
    m(2, y) = 0;
    for (int x = 0; x < 6; ++x) t.set(x, y, x < 2 ? Rgb(0.1, 0.2, 0.3) : x == 2 ? Rgb(0.9, 0.9, 0.9) : Rgb(0.7, 0.5, 0.2));
  }
  EXPECT_EQ(loss_smooth(t, m).value, 0.0);
}

TEST(LossSmooth, GradientMatchesFiniteDifferences) {
  const Image t = random_image(9, 7, 3, 0, 1);
  Mask m(9, 7, 1);
  for (int y = 0; y < 7; ++y) m((y * 3) % 9, y) = 0;
  const SmoothLoss l = loss_smooth(t, m);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    Image p = t, q = t;
    p.data[i] += 1e-3;
    q.data[i] -= 1e-3;
    const double fd = (loss_smooth(p, m).value - loss_smooth(q, m).value) / 2e-3;
    EXPECT_NEAR(l.gradient.data[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(TotalLoss, WeightedSum) {
  const LossReport r = total_loss(0.8, 0.25, 2.0, LossConfig{});
  EXPECT_NEAR(r.total, 2.05, 1e-15);
  EXPECT_NEAR(r.l_a, 1.05, 1e-15);
}

TEST(TotalLoss, WeightElimination) {
  LossConfig cfg;
  cfg.gamma = 0;
  const LossReport a = total_loss(0.8, 0.25, 2.0, cfg);
  EXPECT_EQ(a.total, a.l_a);
  cfg.beta = 0;
  EXPECT_EQ(total_loss(0.8, 0.25, 2.0, cfg).total, 0.8);
}

TEST(TotalLoss, NonFiniteInputNamesTheComponent) {
  try {
    total_loss(0.1, std::nan(""), 0.0, LossConfig{});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("l2"), std::string::npos);
  }
  EXPECT_THROW(total_loss(0.1, 0.1, INFINITY, LossConfig{}), NumericError);
}

TEST(LossConfigValidation, RejectsBadValues) {
  LossConfig c;
  c.tau_attack = 1.0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.beta = -1;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.fallback_k = 0;
  EXPECT_THROW(validate(c), Error);
}

TEST(FrameGradient, MatchesFiniteDifferencesAtMaskedTexels) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 41);
  const DetectorWeights w = init_weights(attack_descriptor(), 5);
  const AttackFrame frame = car_frames(1)[0];
  const Mask mask = attack_masks(m, t, {frame}, MaskMapSpec{})[0];
  const LossConfig lc;
  AttackConfig ac;
  ac.seed = 9;
  auto total = [&](const TextureMap& tex) { return frame_gradient(m, tex, frame, mask, w, lc, ac, 0, 0).loss.total; };
  const FrameGradient fg = frame_gradient(m, t, frame, mask, w, lc, ac, 0, 0);
  std::vector<std::size_t> masked;
  for (std::size_t i = 0; i < t.image.data.size(); ++i)
    if (t.texel_mask.cells[i / 3]) masked.push_back(i);
  std::shuffle(masked.begin(), masked.end(), std::mt19937_64(6));
  masked.resize(120);
  for (std::size_t i : masked) {
    TextureMap p = t, q = t;
    p.image.data[i] += 1e-4;
    q.image.data[i] -= 1e-4;
    const double fd = (total(p) - total(q)) / 2e-4;
    EXPECT_NEAR(fg.texture_gradient.data[i], fd, 1e-2 * std::abs(fd) + 1e-7) << i;
  }
}

TEST(FrameGradient, DetectorPathMatchesFiniteDifferencesOnVisibleTexels) {
  const Mesh m = fixtures::car();
  const TextureMap t = random_texture(m, 64, 64, 42);
  const DetectorWeights w = init_weights(attack_descriptor(), 6);
  const AttackFrame frame = car_frames(1)[0];
  const Mask mask = attack_masks(m, t, {frame}, MaskMapSpec{})[0];
  LossConfig lc;
  lc.gamma = 0;
  AttackConfig ac;
  auto total = [&](const TextureMap& tex) { return frame_gradient(m, tex, frame, mask, w, lc, ac, 0, 0).loss.total; };
  const FrameGradient fg = frame_gradient(m, t, frame, mask, w, lc, ac, 0, 0);
  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < fg.texture_gradient.data.size(); ++i)
    if (fg.texture_gradient.data[i] != 0.0) visible.push_back(i);
  ASSERT_GE(visible.size(), 100u);
  std::shuffle(visible.begin(), visible.end(), std::mt19937_64(7));
  visible.resize(100);
  for (std::size_t i : visible) {
    TextureMap p = t, q = t;
    p.image.data[i] += 1e-4;
    q.image.data[i] -= 1e-4;
    const double fd = (total(p) - total(q)) / 2e-4;
    EXPECT_NEAR(fg.texture_gradient.data[i], fd, 1e-2 * std::abs(fd) + 1e-9) << i;
  }
}

TEST(Optimize, ZeroEpochsIsRejected) {
  const Mesh m = fixtures::car();
  EXPECT_THROW(optimize_texture(m, random_texture(m, 64, 64, 1), car_frames(1), init_weights(attack_descriptor(), 1),
                                LossConfig{}, quick_attack(0)),
               Error);
}

TEST(Optimize, EmptyDatasetIsRejected) {
  const Mesh m = fixtures::car();
  EXPECT_THROW(optimize_texture(m, random_texture(m, 64, 64, 1), {}, init_weights(attack_descriptor(), 1), LossConfig{},
                                quick_attack()),
               Error);
}

TEST(Optimize, ZeroLearningRateLeavesTextureUnchanged) {
  const Mesh m = fixtures::car();
  const TextureMap t0 = random_texture(m, 64, 64, 2);
  AttackConfig ac = quick_attack(1);
  ac.lr = 0;
  const AttackResult r = optimize_texture(m, t0, car_frames(3), init_weights(attack_descriptor(), 2), LossConfig{}, ac);
  EXPECT_EQ(r.texture.image.data, t0.image.data);
  EXPECT_EQ(r.log.size(), 3u);
}

TEST(Optimize, OnlyMaskedTexelsChangeAndStayInRange) {
  const Mesh m = fixtures::car();
  const TextureMap t0 = random_texture(m, 64, 64, 3);
  const AttackResult r = optimize_texture(m, t0, car_frames(4), init_weights(attack_descriptor(), 3), LossConfig{}, quick_attack());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < t0.image.data.size(); ++i) {
    if (!t0.texel_mask.cells[i / 3]) {
      EXPECT_EQ(r.texture.image.data[i], t0.image.data[i]);
    } else {
      changed += r.texture.image.data[i] != t0.image.data[i];
      EXPECT_GE(r.texture.image.data[i], 0.0);
      EXPECT_LE(r.texture.image.data[i], 1.0);
    }
  }
  EXPECT_GT(changed, 0u);
  EXPECT_EQ(r.texture.texel_mask, t0.texel_mask);
}

TEST(Optimize, IsBitReproducible) {
  const Mesh m = fixtures::car();
  const TextureMap t0 = random_texture(m, 64, 64, 4);
  const auto frames = car_frames(3);
  const DetectorWeights w = init_weights(attack_descriptor(), 4);
  AttackConfig ac = quick_attack();
  ac.shuffle = true;
  const AttackResult a = optimize_texture(m, t0, frames, w, LossConfig{}, ac);
  const AttackResult b = optimize_texture(m, t0, frames, w, LossConfig{}, ac);
  EXPECT_EQ(a.texture.image.data, b.texture.image.data);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss.total, b.log[i].loss.total);
}

TEST(Optimize, LargerSmoothingWeightNeverRaisesFinalSmoothness) {
  const Mesh m = fixtures::car();
  const TextureMap t0 = random_texture(m, 64, 64, 5);
  const auto frames = car_frames(4);
  const DetectorWeights w = init_weights(attack_descriptor(), 5);
  double previous = INFINITY;
  for (double gamma : {0.0, 0.5, 2.0}) {
    LossConfig lc;
    lc.gamma = gamma;
    const AttackResult r = optimize_texture(m, t0, frames, w, lc, quick_attack(3));
    const double ls = loss_smooth(r.texture.image, r.texture.texel_mask).value;
    EXPECT_LE(ls, previous) << "gamma " << gamma;
    previous = ls;
  }
}

TEST(Optimize, FinalEpochMeanLossDoesNotExceedFirst) {
  const Mesh m = fixtures::car();
  const AttackResult r = optimize_texture(m, random_texture(m, 64, 64, 6), car_frames(4),
                                          init_weights(attack_descriptor(), 6), LossConfig{}, quick_attack(3));
  const auto means = epoch_means(r.log);
  ASSERT_EQ(means.size(), 3u);
  EXPECT_LE(means.back(), means.front());
}

TEST(Optimize, InseparablePoseAbortsNamingThePose) {
  Mesh m = fixtures::car();
  m.materials[0].albedo = Rgb(0.05, 0.05, 0.05);
  TextureMap t0 = random_texture(m, 64, 64, 7);
  for (int y = 0; y < 64; ++y)
    for (int x = 32; x < 64; ++x) t0.texel_mask(x, y) = 0;
  auto frames = car_frames(6);
  try {
    optimize_texture(m, t0, frames, init_weights(attack_descriptor(), 7), LossConfig{}, quick_attack(1));
    FAIL() << "expected SeparationError";
  } catch (const SeparationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("theta="), std::string::npos) << what;
    EXPECT_NE(what.find("phi="), std::string::npos) << what;
  }
}

TEST(Optimize, FrameSizeMustMatchDetector) {
  const Mesh m = fixtures::car();
  EXPECT_THROW(optimize_texture(m, random_texture(m, 64, 64, 8), car_frames(1, 96), init_weights(attack_descriptor(), 8),
                                LossConfig{}, quick_attack()),
               ShapeError);
}

TEST(LossLog, EpochMeansAverageEachEpoch) {
  std::vector<AttackStep> log;
  for (int e = 0; e < 2; ++e)
    for (int i = 0; i < 3; ++i) {
      AttackStep s;
      s.epoch = e;
      s.loss.total = e * 10 + i;
      log.push_back(s);
    }
  EXPECT_EQ(epoch_means(log), (std::vector<double>{1.0, 11.0}));
}
