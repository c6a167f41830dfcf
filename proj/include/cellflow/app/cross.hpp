#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <vector>

#include "cellflow/errors.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow::app {

/// Plus-shaped set: two unit-length bars of the given thickness crossing at center.
struct CrossShape {
  Vec2 center{};
  double thickness = 0.25;

  bool strictly_contains(Vec2 p) const {
    const double x = std::abs(p.x - center.x), y = std::abs(p.y - center.y);
    const double t = 0.5 * thickness;
    return (x < 0.5 && y < t) || (x < t && y < 0.5);
  }
  double area() const { return 2.0 * thickness - thickness * thickness; }
};

struct CrossData {
  std::vector<Vec2> positions;
  std::vector<double> masses;
  double spacing = 0.0;
};

namespace detail {

inline std::vector<Vec2> cross_lattice(const CrossShape& s, double h) {
  std::vector<Vec2> pts;
  const int k = static_cast<int>(std::ceil(0.5 / h)) + 1;
  for (int i = -k; i < k; ++i)
    for (int j = -k; j < k; ++j) {
      const Vec2 p{s.center.x + (i + 0.5) * h, s.center.y + (j + 0.5) * h};
      if (s.strictly_contains(p)) pts.push_back(p);
    }
  return pts;
}

}  // namespace detail

/// Cell-centred lattice inside the cross with spacing chosen so the count is
/// as close to n as possible; mass split evenly. The lattice is symmetric
/// about the centre, so the data is invariant under quarter turns.
inline CrossData cross_initializer(std::size_t n, double mass, Vec2 center = {},
                                   double thickness = 0.25) {
  if (n == 0) throw ConfigError("cross needs at least one particle");
  if (!(mass > 0.0)) throw ConfigError("cross mass must be positive");
  const CrossShape shape{center, thickness};
  const double h0 = std::sqrt(shape.area() / static_cast<double>(n));

  double best_h = h0;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  constexpr int kScan = 4000;
  for (int s = 0; s <= kScan; ++s) {
    const double h = h0 * (0.7 + 0.6 * s / kScan);
    const std::size_t count = detail::cross_lattice(shape, h).size();
    const std::size_t gap = count > n ? count - n : n - count;
    if (count > 0 && gap < best_gap) {
      best_gap = gap;
      best_h = h;
    }
  }

  CrossData out;
  out.spacing = best_h;
  out.positions = detail::cross_lattice(shape, best_h);
  out.masses.assign(out.positions.size(), mass / static_cast<double>(out.positions.size()));
  return out;
}

}  // namespace cellflow::app
