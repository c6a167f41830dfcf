#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// Edge label for pieces of the domain boundary.
inline constexpr int kDomainEdge = -1;
/// Edge label for the auxiliary bounding box of a clipping disk. Such edges
/// never survive disk clipping.
inline constexpr int kDiskBoxEdge = -2;

/// Straight boundary piece from `a` to `b`. `neighbor` is the index of the
/// adjacent cell, or a negative edge label.
struct Segment {
  Vec2 a;
  Vec2 b;
  int neighbor = kDomainEdge;
};

/// Circular boundary piece: the points center + radius * (cos t, sin t) for t
/// running from `start` to `start + sweep`. A negative sweep is clockwise.
struct Arc {
  Vec2 center;
  double radius = 0.0;
  double start = 0.0;
  double sweep = 0.0;

  Vec2 point_at(double t) const {
    return center + radius * Vec2{std::cos(t), std::sin(t)};
  }
  Vec2 from() const { return point_at(start); }
  Vec2 to() const { return point_at(start + sweep); }
  double length() const { return radius * sweep; }
};

using BoundaryPiece = std::variant<Segment, Arc>;

/// One cell of a tessellation. The boundary is a closed chain of pieces whose
/// winding number is the cell indicator; on non-convex domains it may contain
/// pairs of overlapping pieces with opposite orientation, which cancel.
struct Cell {
  std::size_t owner = 0;
  Vec2 site{};
  std::vector<BoundaryPiece> boundary;
  double area = 0.0;
  Vec2 barycenter{std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN()};
  /// Integral of |x - site|^2 over the cell.
  double second_moment = 0.0;

  bool empty() const { return !(area > 0.0); }
};

struct CellMoments {
  double area = 0.0;
  std::optional<Vec2> barycenter;
  double second_moment = 0.0;
};

namespace detail {

// Raw contour integrals relative to an origin: area, integral of y and of
// |y|^2 where y = x - origin.
struct RawMoments {
  double area = 0.0;
  Vec2 first{};
  double second = 0.0;

  void add_segment(Vec2 a, Vec2 b) {
    const double c = cross(a, b);
    area += 0.5 * c;
    first += (c / 6.0) * (a + b);
    second += c * (norm2(a) + dot(a, b) + norm2(b)) / 12.0;
  }

  // Arc centered at the origin.
  void add_centered_arc(double radius, double start, double sweep) {
    const double r2 = radius * radius;
    const double end = start + sweep;
    area += 0.5 * r2 * sweep;
    first += (r2 * radius / 3.0) *
             Vec2{std::sin(end) - std::sin(start), std::cos(start) - std::cos(end)};
    second += 0.25 * r2 * r2 * sweep;
  }

  // Arc with an arbitrary center c. The contour forms are origin dependent, so
  // the arc is split into its sector about c plus the two radial segments.
  void add_arc(const Arc& arc, Vec2 origin) {
    const Vec2 c = arc.center - origin;
    if (c == Vec2{}) {
      add_centered_arc(arc.radius, arc.start, arc.sweep);
      return;
    }
    RawMoments sector;
    sector.add_centered_arc(arc.radius, arc.start, arc.sweep);
    // shift the sector's moments from c to origin
    area += sector.area;
    first += sector.first + sector.area * c;
    second += sector.second + 2.0 * dot(c, sector.first) + norm2(c) * sector.area;
    // radial pieces c -> from and to -> c close the sector; removing them
    // leaves the arc's own contribution.
    const Vec2 p = arc.from() - origin, q = arc.to() - origin;
    RawMoments spokes;
    spokes.add_segment(c, p);
    spokes.add_segment(q, c);
    area -= spokes.area;
    first -= spokes.first;
    second -= spokes.second;
  }
};

inline RawMoments raw_moments(const std::vector<BoundaryPiece>& boundary, Vec2 origin) {
  RawMoments m;
  for (const auto& piece : boundary) {
    if (const auto* s = std::get_if<Segment>(&piece))
      m.add_segment(s->a - origin, s->b - origin);
    else
      m.add_arc(std::get<Arc>(piece), origin);
  }
  return m;
}

inline std::optional<Vec2> arc_center(const std::vector<BoundaryPiece>& boundary) {
  for (const auto& piece : boundary)
    if (const auto* a = std::get_if<Arc>(&piece)) return a->center;
  return std::nullopt;
}

// Signed sweep from direction u to direction v, in (-pi, pi].
inline double sweep_between(Vec2 u, Vec2 v) { return std::atan2(cross(u, v), dot(u, v)); }

// Appends the part of edge a->b (coordinates relative to the disk center)
// obtained by radially projecting everything outside the disk onto the circle.
// Inside portions keep the edge label. Summed over a closed polygon this gives
// the boundary of polygon-intersect-disk.
template <class SegmentSink, class ArcSink>
void clip_edge_to_disk(Vec2 a, Vec2 b, double radius, SegmentSink&& on_segment,
                       ArcSink&& on_arc) {
  const Vec2 e = b - a;
  const double qa = norm2(e);
  if (qa == 0.0) return;
  const double qb = dot(a, e);
  const double qc = norm2(a) - radius * radius;
  const double disc = qb * qb - qa * qc;
  auto outside_arc = [&](Vec2 u, Vec2 v) {
    const double sw = sweep_between(u, v);
    if (sw != 0.0) on_arc(angle_of(u), sw);
  };
  if (disc <= 0.0) {
    outside_arc(a, b);
    return;
  }
  const double sq = std::sqrt(disc);
  // numerically stable roots of qa t^2 + 2 qb t + qc
  const double q = -(qb + std::copysign(sq, qb));
  double t1 = q / qa, t2 = (q != 0.0) ? qc / q : -t1;
  if (t1 > t2) std::swap(t1, t2);
  const double lo = std::max(t1, 0.0), hi = std::min(t2, 1.0);
  if (!(lo < hi)) {
    outside_arc(a, b);
    return;
  }
  const Vec2 p = lo > 0.0 ? a + lo * e : a;
  const Vec2 r = hi < 1.0 ? a + hi * e : b;
  if (lo > 0.0) outside_arc(a, p);
  on_segment(p, r);
  if (hi < 1.0) outside_arc(r, b);
}

}  // namespace detail

/// Exact area, barycenter and second moment about the owner site, by contour
/// integration over segments and circular arcs.
inline CellMoments cell_moments(const Cell& cell) {
  const Vec2 origin = detail::arc_center(cell.boundary).value_or(cell.site);
  const detail::RawMoments m = detail::raw_moments(cell.boundary, origin);
  CellMoments out;
  if (!(m.area > 0.0)) return out;
  out.area = m.area;
  out.barycenter = origin + m.first / m.area;
  const Vec2 d = cell.site - origin;
  out.second_moment = m.second - 2.0 * dot(d, m.first) + norm2(d) * m.area;
  return out;
}

/// Intersection of a polygonal cell with the disk B(center, radius). Arcs of
/// the result lie on that circle.
inline Cell intersect_with_disk(const Cell& cell, Vec2 center, double radius) {
  Cell out;
  out.owner = cell.owner;
  out.site = cell.site;
  if (radius <= 0.0) return out;
  for (const auto& piece : cell.boundary) {
    const auto* s = std::get_if<Segment>(&piece);
    if (s == nullptr) continue;  // arcs of the input are not supported
    detail::clip_edge_to_disk(
        s->a - center, s->b - center, radius,
        [&](Vec2 p, Vec2 q) { out.boundary.push_back(Segment{p + center, q + center, s->neighbor}); },
        [&](double start, double sweep) {
          if (!out.boundary.empty())
            if (auto* prev = std::get_if<Arc>(&out.boundary.back())) {
              prev->sweep += sweep;
              return;
            }
          out.boundary.push_back(Arc{center, radius, start, sweep});
        });
  }
  const CellMoments m = cell_moments(out);
  if (m.area <= 0.0) {
    out.boundary.clear();
    return out;
  }
  out.area = m.area;
  out.barycenter = *m.barycenter;
  out.second_moment = m.second_moment;
  return out;
}

/// Polygon cell from a counter-clockwise vertex list (domain-labelled edges).
inline Cell polygon_cell(const std::vector<Vec2>& vertices, Vec2 site, std::size_t owner = 0) {
  Cell cell;
  cell.owner = owner;
  cell.site = site;
  for (std::size_t k = 0; k < vertices.size(); ++k)
    cell.boundary.push_back(
        Segment{vertices[k], vertices[(k + 1) % vertices.size()], kDomainEdge});
  const CellMoments m = cell_moments(cell);
  cell.area = m.area;
  if (m.barycenter) cell.barycenter = *m.barycenter;
  cell.second_moment = m.second_moment;
  return cell;
}

}  // namespace cellflow
