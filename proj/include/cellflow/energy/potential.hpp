#pragma once

#include <functional>
#include <utility>

#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// External potential V. The quadratic kind is V(x) = |x - center|^2 / 2.
class Potential {
 public:
  enum class Kind { none, quadratic, custom };

  static Potential none() { return Potential(Kind::none, {}, {}, {}); }
  static Potential quadratic(Vec2 center) { return Potential(Kind::quadratic, center, {}, {}); }
  static Potential custom(std::function<double(Vec2)> v, std::function<Vec2(Vec2)> grad) {
    return Potential(Kind::custom, {}, std::move(v), std::move(grad));
  }

  Kind kind() const { return kind_; }
  Vec2 center() const { return center_; }

  double value(Vec2 x) const {
    switch (kind_) {
      case Kind::none:
        return 0.0;
      case Kind::quadratic:
        return 0.5 * norm2(x - center_);
      case Kind::custom:
        return v_(x);
    }
    return 0.0;
  }

  Vec2 gradient(Vec2 x) const {
    switch (kind_) {
      case Kind::none:
        return {};
      case Kind::quadratic:
        return x - center_;
      case Kind::custom:
        return grad_(x);
    }
    return {};
  }

 private:
  Potential(Kind k, Vec2 c, std::function<double(Vec2)> v, std::function<Vec2(Vec2)> g)
      : kind_(k), center_(c), v_(std::move(v)), grad_(std::move(g)) {}

  Kind kind_;
  Vec2 center_;
  std::function<double(Vec2)> v_;
  std::function<Vec2(Vec2)> grad_;
};

}  // namespace cellflow
