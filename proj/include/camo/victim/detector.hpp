#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "camo/core/box.hpp"
#include "camo/core/error.hpp"
#include "camo/core/image.hpp"
#include "camo/core/random.hpp"

namespace camo {

enum class Activation : int { relu = 0, leaky_relu = 1, tanh = 2 };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "tanh") return Activation::tanh;
  throw Error("unknown activation '" + s + "'");
}

inline constexpr double kLeakySlope = 0.1;

/// Architecture: four stride-2 3x3 convolution blocks, optional stride-1 3x3
/// context blocks, and a 3x3 stride-1 head emitting, per grid cell,
/// [objectness logit, C class logits, tx, ty, tw, th].
struct DetectorDescriptor {
  int input_size = 128;
  std::vector<int> channels{16, 24, 32, 48};
  std::vector<int> context{48};
  int num_classes = kNumClasses;
  Activation activation = Activation::leaky_relu;
  double anchor = 32.0;  // box size at tw = th = 0, in pixels

  int grid() const { return input_size / 16; }
  int stride() const { return 16; }
  int head_channels() const { return 5 + num_classes; }

  friend bool operator==(const DetectorDescriptor&, const DetectorDescriptor&) = default;
};

inline void validate(const DetectorDescriptor& d) {
  if (d.input_size < 16 || d.input_size % 16 != 0) throw Error("detector: input size must be a positive multiple of 16");
  if (d.channels.size() != 4) throw Error("detector: exactly four convolution blocks are required");
  for (int c : d.channels)
    if (c < 1) throw Error("detector: channel counts must be >= 1");
  for (int c : d.context)
    if (c < 1) throw Error("detector: context channel counts must be >= 1");
  if (d.num_classes < 2) throw Error("detector: at least two classes are required");
  if (!(d.anchor > 0.0)) throw Error("detector: anchor must be > 0");
}

struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 3;
  int stride = 1;
  std::vector<float> weight;  // [out][in][ky][kx]
  std::vector<float> bias;    // [out]

  int fan_in() const { return in_channels * kernel * kernel; }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct DetectorWeights {
  DetectorDescriptor descriptor;
  std::vector<ConvLayer> layers;  // stride-2 blocks, context blocks, head

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  friend bool operator==(const DetectorWeights&, const DetectorWeights&) = default;
};

/// Zero-initialized weights with shapes taken from the descriptor.
inline DetectorWeights make_weights(const DetectorDescriptor& d) {
  validate(d);
  DetectorWeights w{d, {}};
  int in = 3;
  for (int c : d.channels) {
    w.layers.push_back({c, in, 3, 2, std::vector<float>(static_cast<std::size_t>(c) * in * 9, 0.0f),
                        std::vector<float>(c, 0.0f)});
    in = c;
  }
  for (int c : d.context) {
    w.layers.push_back({c, in, 3, 1, std::vector<float>(static_cast<std::size_t>(c) * in * 9, 0.0f),
                        std::vector<float>(c, 0.0f)});
    in = c;
  }
  const int h = d.head_channels();
  w.layers.push_back({h, in, 3, 1, std::vector<float>(static_cast<std::size_t>(h) * in * 9, 0.0f), std::vector<float>(h, 0.0f)});
  return w;
}

/// He-uniform initialization, deterministic from the seed.
inline DetectorWeights init_weights(const DetectorDescriptor& d, std::uint64_t seed) {
  DetectorWeights w = make_weights(d);
  Rng rng(derive_seed(seed, 0xD37EC7));
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    ConvLayer& l = w.layers[i];
    const double gain = i + 1 == w.layers.size() ? 0.1 : std::sqrt(2.0);
    const double bound = gain * std::sqrt(3.0 / l.fan_in());
    for (float& v : l.weight) v = static_cast<float>(uniform(rng, -bound, bound));
  }
  return w;
}

/// Checks that tensor shapes agree with the descriptor.
inline void validate(const DetectorWeights& w) {
  const DetectorWeights ref = make_weights(w.descriptor);
  if (w.layers.size() != ref.layers.size()) throw ShapeError("detector weights: wrong layer count");
  for (std::size_t i = 0; i < ref.layers.size(); ++i) {
    const ConvLayer &a = w.layers[i], &b = ref.layers[i];
    if (a.out_channels != b.out_channels || a.in_channels != b.in_channels || a.kernel != b.kernel ||
        a.stride != b.stride || a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
      throw ShapeError("detector weights: layer " + std::to_string(i) + " does not match the descriptor");
    }
  }
}

/// Feature map: channels x (height * width), row-major pixels per channel.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::MatrixXd data;
};

inline FeatureMap image_to_features(const Image& img) {
  FeatureMap f{3, img.height, img.width, Eigen::MatrixXd(3, img.width * img.height)};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) f.data(c, y * img.width + x) = img.at(x, y, c) - 0.5;
  return f;
}

namespace detail {

inline int conv_out(int n, int stride) { return (n + 2 - 3) / stride + 1; }

/// Columns of 3x3 patches with zero padding 1; row index = (c * 3 + ky) * 3 + kx.
inline Eigen::MatrixXd im2col(const FeatureMap& in, int stride) {
  const int ho = conv_out(in.height, stride), wo = conv_out(in.width, stride);
  Eigen::MatrixXd col = Eigen::MatrixXd::Zero(in.channels * 9, ho * wo);
  for (int c = 0; c < in.channels; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int row = (c * 3 + ky) * 3 + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= in.height) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= in.width) continue;
            col(row, oy * wo + ox) = in.data(c, iy * in.width + ix);
          }
        }
      }
    }
  }
  return col;
}

inline Eigen::MatrixXd col2im(const Eigen::MatrixXd& col, int channels, int height, int width, int stride) {
  const int ho = conv_out(height, stride), wo = conv_out(width, stride);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(channels, height * width);
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int row = (c * 3 + ky) * 3 + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= height) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= width) continue;
            out(c, iy * width + ix) += col(row, oy * wo + ox);
          }
        }
      }
    }
  }
  return out;
}

inline Eigen::MatrixXd weight_matrix(const ConvLayer& l) {
  Eigen::MatrixXd w(l.out_channels, l.fan_in());
  for (int o = 0; o < l.out_channels; ++o)
    for (int k = 0; k < l.fan_in(); ++k) w(o, k) = l.weight[static_cast<std::size_t>(o) * l.fan_in() + k];
  return w;
}

inline Eigen::VectorXd bias_vector(const ConvLayer& l) {
  Eigen::VectorXd b(l.out_channels);
  for (int o = 0; o < l.out_channels; ++o) b[o] = l.bias[o];
  return b;
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::leaky_relu: return z > 0.0 ? z : kLeakySlope * z;
    case Activation::tanh: return std::tanh(z);
  }
  return z;
}

inline double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return z > 0.0 ? 1.0 : kLeakySlope;
    case Activation::tanh: return 1.0 - y * y;
  }
  return 1.0;
}

}  // namespace detail

inline double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Per-cell prediction with probabilities applied.
struct Proposal {
  int cell = 0;
  Box box;
  double objectness = 0.5;
  std::vector<double> class_conf;
};

struct DetectorOutput {
  int grid = 0;
  std::vector<Proposal> proposals;  // n_c = grid^2, row-major cells
  Eigen::MatrixXd raw;              // head_channels x grid^2 logits
};

/// Saved activations for the reverse pass.
struct RawScoreTape {
  DetectorDescriptor descriptor;
  std::vector<Eigen::MatrixXd> cols;  // im2col of each layer input
  std::vector<Eigen::MatrixXd> pre;   // pre-activation of each block
  std::vector<Eigen::MatrixXd> post;  // post-activation of each block
  std::vector<std::array<int, 4>> in_shape;  // (channels, height, width, stride) of each layer input
  std::vector<Eigen::MatrixXd> weights;
  std::vector<double> objectness;
  std::vector<double> class_conf;  // grid^2 x C, row-major
};

/// Decodes one cell's raw logits into a box in input pixels.
inline Box decode_box(const DetectorDescriptor& d, int cell, double tx, double ty, double tw, double th) {
  const int s = d.grid();
  const double cx = (cell % s + sigmoid(tx)) * d.stride();
  const double cy = (cell / s + sigmoid(ty)) * d.stride();
  const double w = d.anchor * std::exp(std::clamp(tw, -8.0, 8.0));
  const double h = d.anchor * std::exp(std::clamp(th, -8.0, 8.0));
  return Box::from_center(cx, cy, w, h);
}

inline void softmax(const double* z, int n, double* p) {
  const double m = *std::max_element(z, z + n);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += (p[k] = std::exp(z[k] - m));
  for (int k = 0; k < n; ++k) p[k] /= sum;
}

inline std::pair<DetectorOutput, RawScoreTape> detector_forward(const DetectorWeights& w, const Image& image) {
  const DetectorDescriptor& d = w.descriptor;
  if (image.width != d.input_size || image.height != d.input_size) {
    throw ShapeError("detector_forward: expected a " + std::to_string(d.input_size) + "x" +
                     std::to_string(d.input_size) + " image, got " + std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
  validate(w);
  RawScoreTape tape;
  tape.descriptor = d;
  FeatureMap x = image_to_features(image);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const ConvLayer& l = w.layers[i];
    tape.in_shape.push_back({x.channels, x.height, x.width, l.stride});
    tape.cols.push_back(detail::im2col(x, l.stride));
    tape.weights.push_back(detail::weight_matrix(l));
    Eigen::MatrixXd z = tape.weights.back() * tape.cols.back();
    z.colwise() += detail::bias_vector(l);
    const int ho = detail::conv_out(x.height, l.stride), wo = detail::conv_out(x.width, l.stride);
    if (i + 1 < w.layers.size()) {
      Eigen::MatrixXd y = z.unaryExpr([a = d.activation](double v) { return detail::activate(a, v); });
      tape.pre.push_back(std::move(z));
      tape.post.push_back(y);
      x = FeatureMap{l.out_channels, ho, wo, std::move(y)};
    } else {
      x = FeatureMap{l.out_channels, ho, wo, std::move(z)};
    }
  }

  DetectorOutput out;
  out.grid = d.grid();
  out.raw = std::move(x.data);
  const int cells = out.grid * out.grid, nc = d.num_classes;
  tape.objectness.resize(cells);
  tape.class_conf.resize(static_cast<std::size_t>(cells) * nc);
  out.proposals.resize(cells);
  std::vector<double> z(nc);
  for (int c = 0; c < cells; ++c) {
    Proposal& p = out.proposals[c];
    p.cell = c;
    p.objectness = sigmoid(out.raw(0, c));
    for (int k = 0; k < nc; ++k) z[k] = out.raw(1 + k, c);
    p.class_conf.resize(nc);
    softmax(z.data(), nc, p.class_conf.data());
    p.box = decode_box(d, c, out.raw(1 + nc, c), out.raw(2 + nc, c), out.raw(3 + nc, c), out.raw(4 + nc, c));
    tape.objectness[c] = p.objectness;
    std::copy(p.class_conf.begin(), p.class_conf.end(), tape.class_conf.begin() + static_cast<std::ptrdiff_t>(c) * nc);
  }
  return {std::move(out), std::move(tape)};
}

/// Parameter gradients in the layout of DetectorWeights, in double.
struct WeightGradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

/// Reverse pass from head-logit cotangents (head_channels x grid^2). Returns
/// the cotangent of the normalized input feature map; fills `grads` when given.
inline Eigen::MatrixXd backward_from_logits(const RawScoreTape& tape, const Eigen::MatrixXd& logit_cot,
                                            WeightGradients* grads = nullptr) {
  const std::size_t n = tape.cols.size();
  if (logit_cot.rows() != tape.weights.back().rows() || logit_cot.cols() != tape.cols.back().cols()) {
    throw ShapeError("detector backward: cotangent shape does not match the head output");
  }
  if (grads) {
    grads->weight.assign(n, {});
    grads->bias.assign(n, {});
  }
  Eigen::MatrixXd g = logit_cot;
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 < n) {
      const Eigen::MatrixXd& z = tape.pre[i];
      const Eigen::MatrixXd& y = tape.post[i];
      for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] *= detail::activate_grad(tape.descriptor.activation, z.data()[k], y.data()[k]);
    }
    if (grads) {
      grads->weight[i] = g * tape.cols[i].transpose();
      grads->bias[i] = g.rowwise().sum();
    }
    const auto& s = tape.in_shape[i];
    g = detail::col2im(tape.weights[i].transpose() * g, s[0], s[1], s[2], s[3]);
  }
  return g;
}

/// Cotangents with respect to the decoded probabilities.
struct ScoreCotangents {
  std::vector<double> objectness;  // grid^2
  std::vector<double> class_conf;  // grid^2 x C, row-major

  static ScoreCotangents zeros(const DetectorDescriptor& d) {
    const std::size_t cells = static_cast<std::size_t>(d.grid()) * d.grid();
    return {std::vector<double>(cells, 0.0), std::vector<double>(cells * d.num_classes, 0.0)};
  }
};

/// Pulls probability cotangents back through sigmoid / softmax.
inline Eigen::MatrixXd logit_cotangent(const RawScoreTape& tape, const ScoreCotangents& cot) {
  const DetectorDescriptor& d = tape.descriptor;
  const int cells = d.grid() * d.grid(), nc = d.num_classes;
  if (cot.objectness.size() != static_cast<std::size_t>(cells) ||
      cot.class_conf.size() != static_cast<std::size_t>(cells) * nc) {
    throw ShapeError("detector_input_vjp: score cotangents must have grid^2 objectness and grid^2 x C class entries");
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d.head_channels(), cells);
  for (int c = 0; c < cells; ++c) {
    const double o = tape.objectness[c];
    g(0, c) = cot.objectness[c] * o * (1.0 - o);
    const double* p = &tape.class_conf[static_cast<std::size_t>(c) * nc];
    const double* gp = &cot.class_conf[static_cast<std::size_t>(c) * nc];
    double dot = 0.0;
    for (int k = 0; k < nc; ++k) dot += gp[k] * p[k];
    for (int k = 0; k < nc; ++k) g(1 + k, c) = p[k] * (gp[k] - dot);
  }
  return g;
}

inline Image features_to_image_cotangent(const Eigen::MatrixXd& g, int width, int height) {
  Image out(width, height, 0.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = g(c, y * width + x);
  return out;
}

/// Image cotangent of <cot, (objectness, class_conf)>.
inline Image detector_input_vjp(const RawScoreTape& tape, const ScoreCotangents& cot) {
  const Eigen::MatrixXd g = backward_from_logits(tape, logit_cotangent(tape, cot));
  return features_to_image_cotangent(g, tape.descriptor.input_size, tape.descriptor.input_size);
}

struct Detection {
  Box box;
  double confidence = 0.0;  // objectness
  int label = 0;            // argmax class
  int cell = 0;
};

inline int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Cells with objectness >= tau ranked by objectness (ties by cell index).
inline std::vector<Detection> threshold_proposals(const DetectorOutput& out, double tau) {
  std::vector<Detection> d;
  for (const Proposal& p : out.proposals)
    if (p.objectness >= tau) d.push_back({p.box, p.objectness, argmax(p.class_conf), p.cell});
  std::stable_sort(d.begin(), d.end(), [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return d;
}

/// Greedy class-agnostic suppression over a ranked list.
inline std::vector<Detection> nms(const std::vector<Detection>& ranked, double iou_threshold) {
  std::vector<Detection> kept;
  for (const Detection& d : ranked) {
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const Detection& k) { return iou(k.box, d.box) > iou_threshold; });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

inline std::vector<Detection> decode_detections(const DetectorOutput& out, double tau_det = 0.5, double nms_iou = 0.5) {
  if (!(tau_det > 0.0 && tau_det < 1.0)) throw Error("decode_detections: confidence threshold must lie in (0,1)");
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) throw Error("decode_detections: nms threshold must lie in (0,1)");
  return nms(threshold_proposals(out, tau_det), nms_iou);
}

}  // namespace camo
