#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cellflow/geometry/domain.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// Uniform bucket grid over a point set, roughly one point per bucket.
class PointGrid {
 public:
  explicit PointGrid(std::span<const Vec2> points) {
    const std::size_t n = points.size();
    if (n == 0) return;
    Box box{points[0], points[0]};
    for (Vec2 p : points) {
      box.lo = {std::min(box.lo.x, p.x), std::min(box.lo.y, p.y)};
      box.hi = {std::max(box.hi.x, p.x), std::max(box.hi.y, p.y)};
    }
    origin_ = box.lo;
    const double w = box.width(), h = box.height();
    const double extent = std::max(w, h);
    double size = std::sqrt(w * h / static_cast<double>(n));
    if (!(size > 0.0)) size = extent / static_cast<double>(n);
    if (!(size > 0.0)) size = 1.0;
    constexpr int kMaxBuckets = 2048;
    nx_ = std::clamp(static_cast<int>(std::ceil(w / size)), 1, kMaxBuckets);
    ny_ = std::clamp(static_cast<int>(std::ceil(h / size)), 1, kMaxBuckets);
    size_ = std::max({size, w / nx_, h / ny_});
    start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    bucket_of_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [cx, cy] = bucket(points[i]);
      bucket_of_[i] = index(cx, cy);
      ++start_[bucket_of_[i] + 1];
    }
    for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
    items_.resize(n);
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) items_[fill[bucket_of_[i]]++] = i;
  }

  double bucket_size() const { return size_; }

  std::pair<int, int> bucket(Vec2 p) const {
    const int cx = std::clamp(static_cast<int>((p.x - origin_.x) / size_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y - origin_.y) / size_), 0, ny_ - 1);
    return {cx, cy};
  }

  /// Largest Chebyshev ring index that still touches the grid from (cx, cy).
  int max_ring(int cx, int cy) const {
    return std::max({cx, nx_ - 1 - cx, cy, ny_ - 1 - cy});
  }

  /// Calls f(point index) for every point in buckets at Chebyshev distance
  /// exactly `ring` from (cx, cy).
  template <class F>
  void for_each_in_ring(int cx, int cy, int ring, F&& f) const {
    auto visit = [&](int x, int y) {
      if (x < 0 || y < 0 || x >= nx_ || y >= ny_) return;
      const std::size_t b = index(x, y);
      for (std::size_t k = start_[b]; k < start_[b + 1]; ++k) f(items_[k]);
    };
    if (ring == 0) {
      visit(cx, cy);
      return;
    }
    for (int x = cx - ring; x <= cx + ring; ++x) {
      visit(x, cy - ring);
      visit(x, cy + ring);
    }
    for (int y = cy - ring + 1; y <= cy + ring - 1; ++y) {
      visit(cx - ring, y);
      visit(cx + ring, y);
    }
  }

 private:
  std::size_t index(int cx, int cy) const {
    return static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(cx);
  }

  Vec2 origin_{};
  double size_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
  std::vector<std::size_t> bucket_of_;
};

}  // namespace cellflow
