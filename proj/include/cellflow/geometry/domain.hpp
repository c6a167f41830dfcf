#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cellflow/errors.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

struct Box {
  Vec2 lo;
  Vec2 hi;
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

namespace detail {

inline double signed_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) twice += cross(poly[k], poly[(k + 1) % n]);
  return 0.5 * twice;
}

// Andrew's monotone chain, counter-clockwise, collinear points dropped.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline int orientation(Vec2 a, Vec2 b, Vec2 c, double tol) {
  const double v = cross(b - a, c - a);
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p, double tol) {
  return std::min(a.x, b.x) - tol <= p.x && p.x <= std::max(a.x, b.x) + tol &&
         std::min(a.y, b.y) - tol <= p.y && p.y <= std::max(a.y, b.y) + tol;
}

inline bool segments_touch(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double area_tol,
                           double length_tol) {
  const int o1 = orientation(a, b, c, area_tol), o2 = orientation(a, b, d, area_tol);
  const int o3 = orientation(c, d, a, area_tol), o4 = orientation(c, d, b, area_tol);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment(a, b, c, length_tol)) return true;
  if (o2 == 0 && on_segment(a, b, d, length_tol)) return true;
  if (o3 == 0 && on_segment(c, d, a, length_tol)) return true;
  if (o4 == 0 && on_segment(c, d, b, length_tol)) return true;
  return false;
}

}  // namespace detail

/// A closed simple polygon, stored counter-clockwise, with its derived
/// measures precomputed.
class Domain {
 public:
  explicit Domain(std::vector<Vec2> boundary) : boundary_(std::move(boundary)) {
    // Drop an explicit closing vertex.
    if (boundary_.size() > 1 && boundary_.front() == boundary_.back()) boundary_.pop_back();
    if (boundary_.size() < 3) throw InvalidDomain("domain needs at least 3 vertices");
    for (Vec2 v : boundary_)
      if (!std::isfinite(v.x) || !std::isfinite(v.y))
        throw InvalidDomain("domain vertex is not finite");
    double area = detail::signed_area(boundary_);
    if (area < 0) {
      std::reverse(boundary_.begin(), boundary_.end());
      area = -area;
    }
    hull_ = detail::convex_hull(boundary_);
    if (hull_.size() < 3 || !(area > 0)) throw InvalidDomain("domain has zero area");
    area_ = area;
    for (std::size_t a = 0; a < hull_.size(); ++a)
      for (std::size_t b = a + 1; b < hull_.size(); ++b)
        diameter_ = std::max(diameter_, distance(hull_[a], hull_[b]));
    check_simple();

    Vec2 first{};
    const std::size_t n = boundary_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 a = boundary_[k], b = boundary_[(k + 1) % n];
      first += cross(a, b) / 6.0 * (a + b);
    }
    barycenter_ = first / area_;

    bounds_ = {boundary_[0], boundary_[0]};
    for (Vec2 v : boundary_) {
      bounds_.lo = {std::min(bounds_.lo.x, v.x), std::min(bounds_.lo.y, v.y)};
      bounds_.hi = {std::max(bounds_.hi.x, v.x), std::max(bounds_.hi.y, v.y)};
    }
    convex_ = true;
    for (std::size_t k = 0; k < n && convex_; ++k)
      if (cross(boundary_[(k + 1) % n] - boundary_[k],
                boundary_[(k + 2) % n] - boundary_[(k + 1) % n]) < -1e-14 * diameter_ * diameter_)
        convex_ = false;
  }

  static Domain rectangle(Vec2 lo, Vec2 hi) {
    return Domain({lo, {hi.x, lo.y}, hi, {lo.x, hi.y}});
  }
  static Domain square(double lo, double hi) { return rectangle({lo, lo}, {hi, hi}); }

  const std::vector<Vec2>& boundary() const { return boundary_; }
  const std::vector<Vec2>& convex_hull() const { return hull_; }
  double area() const { return area_; }
  Vec2 barycenter() const { return barycenter_; }
  double diameter() const { return diameter_; }
  bool is_convex() const { return convex_; }
  const Box& bounds() const { return bounds_; }

  /// Even-odd point-in-polygon test.
  bool contains(Vec2 p) const {
    bool inside = false;
    const std::size_t n = boundary_.size();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
      const Vec2 u = boundary_[a], v = boundary_[b];
      if ((u.y > p.y) != (v.y > p.y) && p.x < (v.x - u.x) * (p.y - u.y) / (v.y - u.y) + u.x)
        inside = !inside;
    }
    return inside;
  }

  /// Signed distance-like test against the convex hull: true when `p` lies
  /// within `tol` of conv(domain).
  bool hull_contains(Vec2 p, double tol = 0.0) const {
    const std::size_t n = hull_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 a = hull_[k], b = hull_[(k + 1) % n];
      const Vec2 e = b - a;
      if (cross(e, p - a) / norm(e) < -tol) return false;
    }
    return true;
  }

 private:
  void check_simple() const {
    const std::size_t n = boundary_.size();
    const double tol = 1e-14 * diameter_ * diameter_;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (b == a + 1 || (a == 0 && b == n - 1)) continue;
        if (detail::segments_touch(boundary_[a], boundary_[(a + 1) % n], boundary_[b],
                                   boundary_[(b + 1) % n], tol, 1e-12 * diameter_))
          throw InvalidDomain("domain boundary self-intersects");
      }
    }
  }

  std::vector<Vec2> boundary_;
  std::vector<Vec2> hull_;
  double area_ = 0.0;
  double diameter_ = 0.0;
  Vec2 barycenter_{};
  Box bounds_{};
  bool convex_ = true;
};

/// Reads "x y" pairs, one per line. Blank lines and '#' comments are ignored.
inline Domain load_domain(std::istream& in) {
  std::vector<Vec2> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Vec2 p;
    if (!(ls >> p.x >> p.y))
      throw InvalidDomain("malformed vertex on line " + std::to_string(lineno));
    pts.push_back(p);
  }
  return Domain(std::move(pts));
}

inline Domain load_domain_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidDomain("cannot open domain file " + path.string());
  return load_domain(in);
}

}  // namespace cellflow
