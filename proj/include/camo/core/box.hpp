#pragma once

#include <algorithm>

namespace camo {

/// Axis-aligned pixel rectangle [x0, x1) x [y0, y1).
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return std::max(0.0, x1 - x0); }
  double height() const { return std::max(0.0, y1 - y0); }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }

  static Box from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Object classes of the victim detector.
enum class ObjectClass : int { car = 0, ground = 1, distractor = 2, background = 3 };
inline constexpr int kNumClasses = 4;

/// Intersection over union; 0 when both boxes are empty.
inline double iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct LabeledBox {
  ObjectClass label = ObjectClass::car;
  Box box;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

}  // namespace camo
