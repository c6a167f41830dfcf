#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "cellflow/geometry/cell.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

struct QuadratureOptions {
  /// Each fan triangle is split into 4^subdivisions congruent pieces.
  int subdivisions = 1;
  /// Arc sectors are split into angular pieces no wider than this.
  double max_sector_angle = std::numbers::pi / 8.0;
};

namespace detail {

// Symmetric six-point rule, exact for polynomials of degree 4.
struct TrianglePoint {
  double l1, l2, l3, weight;
};
inline constexpr double kDunA = 0.445948490915965;
inline constexpr double kDunB = 0.091576213509771;
inline constexpr double kDunWA = 0.223381589678011;
inline constexpr double kDunWB = 0.109951743655322;
inline constexpr std::array<TrianglePoint, 6> kDunavant4{{
    {kDunA, kDunA, 1.0 - 2.0 * kDunA, kDunWA},
    {kDunA, 1.0 - 2.0 * kDunA, kDunA, kDunWA},
    {1.0 - 2.0 * kDunA, kDunA, kDunA, kDunWA},
    {kDunB, kDunB, 1.0 - 2.0 * kDunB, kDunWB},
    {kDunB, 1.0 - 2.0 * kDunB, kDunB, kDunWB},
    {1.0 - 2.0 * kDunB, kDunB, kDunB, kDunWB},
}};

// Signed integral over triangle (a, b, c); weights sum to 1.
template <class T, class F>
T integrate_triangle(Vec2 a, Vec2 b, Vec2 c, F&& f, int level) {
  if (level > 0) {
    const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    T sum = integrate_triangle<T>(a, ab, ca, f, level - 1);
    sum += integrate_triangle<T>(ab, b, bc, f, level - 1);
    sum += integrate_triangle<T>(ca, bc, c, f, level - 1);
    sum += integrate_triangle<T>(bc, ca, ab, f, level - 1);
    return sum;
  }
  const double area = 0.5 * cross(b - a, c - a);
  T sum{};
  for (const auto& p : kDunavant4) sum += (area * p.weight) * f(p.l1 * a + p.l2 * b + p.l3 * c);
  return sum;
}

// Polar Gauss-Legendre over the sector {center + s e(theta)}, 0<=s<=r.
template <class T, class F>
T integrate_sector(const Arc& arc, F&& f, double max_angle) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  auto nodes = [&](auto&& g) {  // g(node in [-1,1], weight)
    for (std::size_t k = 0; k < x.size(); ++k) {
      g(x[k], w[k]);
      if (x[k] != 0.0) g(-x[k], w[k]);
    }
  };
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(arc.sweep) / max_angle)));
  const double dth = arc.sweep / pieces;
  const double hr = 0.5 * arc.radius;
  T sum{};
  for (int p = 0; p < pieces; ++p) {
    const double mid = arc.start + (p + 0.5) * dth;
    nodes([&](double u, double wu) {
      const double th = mid + 0.5 * dth * u;
      const Vec2 e{std::cos(th), std::sin(th)};
      nodes([&](double v, double wv) {
        const double s = hr * (1.0 + v);
        sum += (0.5 * dth * wu * hr * wv * s) * f(arc.center + s * e);
      });
    });
  }
  return sum;
}

}  // namespace detail

/// Integral of f over a cell. Triangles fan out from the arc center when the
/// cell has arcs (so arcs become exact sectors), otherwise from the barycenter.
template <class T = double, class F>
T integrate_over_cell(const Cell& cell, F&& f, const QuadratureOptions& opt = {}) {
  T sum{};
  if (cell.boundary.empty()) return sum;
  const auto center = detail::arc_center(cell.boundary);
  const Vec2 o = center ? *center : (std::isfinite(cell.barycenter.x) ? cell.barycenter : cell.site);
  for (const auto& piece : cell.boundary) {
    if (const auto* s = std::get_if<Segment>(&piece)) {
      sum += detail::integrate_triangle<T>(o, s->a, s->b, f, opt.subdivisions);
    } else {
      sum += detail::integrate_sector<T>(std::get<Arc>(piece), f, opt.max_sector_angle);
    }
  }
  return sum;
}

/// Boundary points of a cell: segment endpoints plus arc samples. Arc
/// stretches cancelled by an opposite arc are not part of the cell and are skipped.
inline std::vector<Vec2> boundary_samples(const Cell& cell, int per_arc = 16) {
  std::vector<Vec2> pts;
  std::vector<const Arc*> arcs;
  for (const auto& piece : cell.boundary) {
    if (const auto* s = std::get_if<Segment>(&piece)) {
      pts.push_back(s->a);
      pts.push_back(s->b);
    } else {
      arcs.push_back(&std::get<Arc>(piece));
    }
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto net_cover = [&](double th) {
    int k = 0;
    for (const Arc* a : arcs) {
      const double lo = std::min(a->start, a->start + a->sweep);
      const double t = lo + std::fmod(std::fmod(th - lo, two_pi) + two_pi, two_pi);
      if (t <= lo + std::abs(a->sweep)) k += a->sweep > 0 ? 1 : -1;
    }
    return k;
  };
  for (const Arc* a : arcs)
    for (int k = 0; k <= per_arc; ++k) {
      const double th = a->start + a->sweep * k / per_arc;
      if (arcs.size() == 1 || net_cover(th) > 0) pts.push_back(a->point_at(th));
    }
  return pts;
}

/// Largest distance between two boundary points (arcs sampled).
inline double cell_diameter(const Cell& cell) {
  const auto pts = boundary_samples(cell);
  double d2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d2 = std::max(d2, norm2(pts[i] - pts[j]));
  return std::sqrt(d2);
}

}  // namespace cellflow
