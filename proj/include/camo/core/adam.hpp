#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace camo {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool plain_sgd = false;  // ablation: x -= lr * g
};

/// First/second moment gradient descent with bias correction.
class Adam {
 public:
  Adam(std::size_t n, const AdamConfig& cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  std::size_t size() const { return m_.size(); }
  long steps() const { return t_; }

  /// In-place update of `x[i]` for every i where `active` is null or true.
  void step(double* x, const double* g, const std::vector<std::uint8_t>* active = nullptr) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
      if (active && !(*active)[i]) continue;
      if (cfg_.plain_sgd) {
        x[i] -= cfg_.lr * g[i];
        continue;
      }
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      x[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace camo
