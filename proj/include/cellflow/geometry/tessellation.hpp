#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "cellflow/errors.hpp"
#include "cellflow/geometry/cell.hpp"
#include "cellflow/geometry/domain.hpp"
#include "cellflow/geometry/point_grid.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// full: Laguerre cells partition the domain. clipped: each Laguerre cell is
/// further intersected with the ball B(x_i, sqrt(w_i^+)).
enum class TessellationMode { full, clipped };

inline const char* to_string(TessellationMode m) {
  return m == TessellationMode::full ? "full" : "clipped";
}

struct Neighbor {
  std::size_t index = 0;
  double length = 0.0;
};

struct Tessellation {
  TessellationMode mode = TessellationMode::full;
  std::vector<Vec2> positions;
  std::vector<double> weights;
  std::vector<Cell> cells;
  /// Per cell, adjacent cells sorted by index with the shared interface length.
  std::vector<std::vector<Neighbor>> adjacency;
  /// Per cell, net length of boundary arcs (clipped mode only).
  std::vector<double> arc_length;

  std::size_t size() const { return cells.size(); }

  double interface(std::size_t i, std::size_t j) const {
    const auto& adj = adjacency[i];
    auto it = std::lower_bound(adj.begin(), adj.end(), j,
                               [](const Neighbor& n, std::size_t k) { return n.index < k; });
    return (it != adj.end() && it->index == j) ? it->length : 0.0;
  }

  double total_area() const {
    double a = 0.0;
    for (const auto& c : cells) a += c.area;
    return a;
  }

  std::vector<double> areas() const {
    std::vector<double> a(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) a[i] = cells[i].area;
    return a;
  }
};

struct TessellationOptions {
  /// Spatial pruning of candidate neighbors. When false every pair is clipped.
  bool prune = true;
  bool parallel = true;
};

namespace detail {

// Polygon in coordinates relative to the cell site; label[k] tags the edge
// from v[k] to v[k+1].
struct LocalPolygon {
  std::vector<Vec2> v;
  std::vector<int> label;

  void clear() {
    v.clear();
    label.clear();
  }
  void push(Vec2 p, int l) {
    v.push_back(p);
    label.push_back(l);
  }
  bool empty() const { return v.size() < 3; }
};

// Sutherland-Hodgman step against {y : dot(y, n) <= c}. Returns false when the
// half-plane contains the whole polygon (no output written).
inline bool clip_half_plane(const LocalPolygon& in, LocalPolygon& out, Vec2 n, double c,
                            int label, std::vector<double>& side) {
  const std::size_t m = in.v.size();
  side.resize(m);
  bool any_out = false, any_in = false;
  for (std::size_t k = 0; k < m; ++k) {
    side[k] = dot(in.v[k], n) - c;
    if (side[k] > 0.0)
      any_out = true;
    else
      any_in = true;
  }
  if (!any_out) return false;
  out.clear();
  if (!any_in) return true;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t k1 = (k + 1 == m) ? 0 : k + 1;
    const double s0 = side[k], s1 = side[k1];
    const Vec2 p = in.v[k], q = in.v[k1];
    if (s0 <= 0.0) {
      out.push(p, in.label[k]);
      if (s1 > 0.0) out.push(p + (s0 / (s0 - s1)) * (q - p), label);
    } else if (s1 <= 0.0) {
      out.push(p + (s0 / (s0 - s1)) * (q - p), in.label[k]);
    }
  }
  if (out.empty()) out.clear();
  return true;
}

// Length of the union-with-cancellation of collinear oriented pieces: the
// integral of |multiplicity| along the line.
inline double net_collinear_length(std::vector<std::pair<double, int>>& events) {
  std::sort(events.begin(), events.end());
  double total = 0.0;
  int mult = 0;
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    mult += events[k].second;
    total += std::abs(mult) * (events[k + 1].first - events[k].first);
  }
  return total;
}

struct CellBuild {
  Cell cell;
  std::vector<Neighbor> neighbors;
  double arc_length = 0.0;
};

struct Workspace {
  LocalPolygon a, b;
  std::vector<double> side;
  std::vector<std::pair<int, std::pair<Vec2, Vec2>>> shared;
  std::vector<std::pair<double, int>> events;
};

class TessellationBuilder {
 public:
  TessellationBuilder(const Domain& domain, std::span<const Vec2> positions,
                      std::span<const double> weights, TessellationMode mode,
                      const TessellationOptions& opt)
      : domain_(domain),
        x_(positions),
        w_(weights),
        mode_(mode),
        opt_(opt),
        grid_(positions) {
    w_max_ = -std::numeric_limits<double>::infinity();
    for (double w : w_) w_max_ = std::max(w_max_, w);
    empty_area_ = 1e-14 * domain_.area();
    min_interface_ = 1e-12 * domain_.diameter();
  }

  void check_coincident() const {
    const double tol = 1e-14 * domain_.diameter();
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const auto [cx, cy] = grid_.bucket(x_[i]);
      for (int ring = 0; ring <= 1; ++ring)
        grid_.for_each_in_ring(cx, cy, ring, [&](std::size_t j) {
          if (j > i && distance(x_[i], x_[j]) <= tol) throw CoincidentParticles(i, j);
        });
    }
  }

  CellBuild build(std::size_t i, Workspace& ws) const {
    CellBuild out;
    out.cell.owner = i;
    out.cell.site = x_[i];
    const Vec2 xi = x_[i];
    const bool clipped = mode_ == TessellationMode::clipped;
    double radius = std::numeric_limits<double>::infinity();
    if (clipped) {
      if (!(w_[i] > 0.0)) return out;
      radius = std::sqrt(w_[i]);
    }

    LocalPolygon* cur = &ws.a;
    LocalPolygon* nxt = &ws.b;
    cur->clear();
    for (Vec2 v : domain_.boundary()) cur->push(v - xi, kDomainEdge);
    if (clipped) {
      const Vec2 axes[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
      for (Vec2 n : axes) {
        if (clip_half_plane(*cur, *nxt, n, radius, kDiskBoxEdge, ws.side)) std::swap(cur, nxt);
        if (cur->empty()) return out;
      }
    }

    auto reach = [&] {
      double r2 = 0.0;
      for (Vec2 v : cur->v) r2 = std::max(r2, norm2(v));
      return std::min(std::sqrt(r2), radius);
    };
    double R = reach();
    const double wi = w_[i];

    auto consider = [&](std::size_t j) -> bool {
      if (j == i) return true;
      const Vec2 d = x_[j] - xi;
      const double d2 = norm2(d);
      const double c = 0.5 * (d2 + wi - w_[j]);
      // half-plane contains B(0, R), hence the current cell
      if (c >= R * std::sqrt(d2)) return true;
      if (clip_half_plane(*cur, *nxt, d, c, static_cast<int>(j), ws.side)) {
        std::swap(cur, nxt);
        if (cur->empty()) return false;
        R = reach();
      }
      return true;
    };

    bool alive = true;
    if (opt_.prune) {
      const auto [cx, cy] = grid_.bucket(xi);
      const int last = grid_.max_ring(cx, cy);
      const double h = grid_.bucket_size();
      const double delta = std::min(wi - w_max_, 0.0);
      for (int ring = 0; ring <= last && alive; ++ring) {
        grid_.for_each_in_ring(cx, cy, ring, [&](std::size_t j) {
          if (alive) alive = consider(j);
        });
        if (ring >= 1) {
          const double s = ring * h;
          if ((s * s + delta) / (2.0 * s) >= R) break;
        }
      }
    } else {
      for (std::size_t j = 0; j < x_.size() && alive; ++j) alive = consider(j);
    }
    if (!alive || cur->empty()) return out;

    finish(out, *cur, radius, ws);
    return out;
  }

 private:
  void finish(CellBuild& out, const LocalPolygon& poly, double radius, Workspace& ws) const {
    const Vec2 xi = out.cell.site;
    const bool clipped = mode_ == TessellationMode::clipped;
    RawMoments m;
    auto& shared = ws.shared;
    shared.clear();
    out.cell.boundary.reserve(poly.v.size() + 2);
    auto add_segment = [&](Vec2 p, Vec2 q, int label) {
      m.add_segment(p, q);
      out.cell.boundary.push_back(Segment{p + xi, q + xi, label});
      if (label >= 0) shared.push_back({label, {p, q}});
    };
    const std::size_t n = poly.v.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 p = poly.v[k], q = poly.v[(k + 1) % n];
      const int label = poly.label[k];
      if (!clipped) {
        if (p != q) add_segment(p, q, label);
        continue;
      }
      clip_edge_to_disk(
          p, q, radius, [&](Vec2 a, Vec2 b) { add_segment(a, b, label); },
          [&](double start, double sweep) {
            m.add_centered_arc(radius, start, sweep);
            out.arc_length += radius * sweep;
            if (!out.cell.boundary.empty())
              if (auto* prev = std::get_if<Arc>(&out.cell.boundary.back())) {
                prev->sweep += sweep;
                return;
              }
            out.cell.boundary.push_back(Arc{xi, radius, start, sweep});
          });
    }
    if (!(m.area > empty_area_)) {
      out.cell.boundary.clear();
      out.arc_length = 0.0;
      return;
    }
    out.cell.area = m.area;
    out.cell.barycenter = xi + m.first / m.area;
    out.cell.second_moment = m.second;

    std::sort(shared.begin(), shared.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& events = ws.events;
    out.neighbors.reserve(shared.size());
    for (std::size_t k = 0; k < shared.size();) {
      const int j = shared[k].first;
      std::size_t e = k;
      double len = 0.0;
      if (domain_.is_convex()) {
        for (; e < shared.size() && shared[e].first == j; ++e)
          len += distance(shared[e].second.first, shared[e].second.second);
      } else {
        const Vec2 d = x_[static_cast<std::size_t>(j)] - xi;
        const Vec2 u = Vec2{-d.y, d.x} / norm(d);
        events.clear();
        for (; e < shared.size() && shared[e].first == j; ++e) {
          const double t0 = dot(shared[e].second.first, u), t1 = dot(shared[e].second.second, u);
          events.push_back({std::min(t0, t1), t1 > t0 ? 1 : -1});
          events.push_back({std::max(t0, t1), t1 > t0 ? -1 : 1});
        }
        len = net_collinear_length(events);
      }
      if (len > min_interface_) out.neighbors.push_back({static_cast<std::size_t>(j), len});
      k = e;
    }
  }

  const Domain& domain_;
  std::span<const Vec2> x_;
  std::span<const double> w_;
  TessellationMode mode_;
  TessellationOptions opt_;
  PointGrid grid_;
  double w_max_ = 0.0;
  double empty_area_ = 0.0;
  double min_interface_ = 0.0;
};

}  // namespace detail

/// Laguerre tessellation of `domain` for sites `positions` and `weights`.
/// Cell i is {x in domain : |x-x_i|^2 - w_i <= |x-x_j|^2 - w_j for all j},
/// intersected with B(x_i, sqrt(w_i^+)) in clipped mode.
inline Tessellation build_tessellation(const Domain& domain, std::span<const Vec2> positions,
                                       std::span<const double> weights, TessellationMode mode,
                                       const TessellationOptions& opt = {}) {
  const std::size_t n = positions.size();
  if (weights.size() != n) throw LengthMismatch("positions and weights differ in length");
  Tessellation t;
  t.mode = mode;
  t.positions.assign(positions.begin(), positions.end());
  t.weights.assign(weights.begin(), weights.end());
  t.cells.resize(n);
  t.adjacency.resize(n);
  t.arc_length.assign(n, 0.0);
  if (n == 0) return t;

  detail::TessellationBuilder builder(domain, t.positions, t.weights, mode, opt);
  builder.check_coincident();

  std::vector<std::vector<Neighbor>> raw(n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long count = static_cast<long>(n);
#pragma omp parallel if (opt.parallel && n > 64)
  {
    detail::Workspace ws;
#pragma omp for schedule(dynamic, 32)
    for (long k = 0; k < count; ++k) {
      try {
        auto built = builder.build(static_cast<std::size_t>(k), ws);
        t.cells[k] = std::move(built.cell);
        raw[k] = std::move(built.neighbors);
        t.arc_length[k] = built.arc_length;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < n; ++i) t.adjacency[i].reserve(raw[i].size() + 2);
  // Symmetrize: the interface seen from i and from j agree up to rounding.
  auto lookup = [&](std::size_t i, std::size_t j) -> double {
    const auto& adj = raw[i];
    auto it = std::lower_bound(adj.begin(), adj.end(), j,
                               [](const Neighbor& a, std::size_t k) { return a.index < k; });
    return (it != adj.end() && it->index == j) ? it->length : -1.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (const Neighbor& nb : raw[i]) {
      const std::size_t j = nb.index;
      if (j <= i) continue;
      if (t.cells[i].empty() || t.cells[j].empty()) continue;
      const double other = lookup(j, i);
      const double len = other >= 0.0 ? 0.5 * (nb.length + other) : nb.length;
      t.adjacency[i].push_back({j, len});
      t.adjacency[j].push_back({i, len});
    }
    for (const Neighbor& nb : raw[i]) {
      const std::size_t j = nb.index;
      // seen only from the higher index
      if (j < i && lookup(j, i) < 0.0 && !t.cells[i].empty() && !t.cells[j].empty()) {
        t.adjacency[i].push_back({j, nb.length});
        t.adjacency[j].push_back({i, nb.length});
      }
    }
  }
  for (auto& adj : t.adjacency)
    std::sort(adj.begin(), adj.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return t;
}

/// Derivative of the cell areas with respect to the weights, d|L_i|/dw_j.
/// Off-diagonal entries are -interface(i,j) / (2|x_i - x_j|); the diagonal is
/// minus the off-diagonal row sum plus, in clipped mode, arc_i / (2 sqrt(w_i)).
inline Eigen::SparseMatrix<double> area_jacobian(const Tessellation& tess,
                                                 std::span<const Vec2> positions) {
  const std::size_t n = tess.size();
  if (positions.size() != n) throw LengthMismatch("positions do not match tessellation");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 7);
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0;
    for (const Neighbor& nb : tess.adjacency[i]) {
      const double v = nb.length / (2.0 * distance(positions[i], positions[nb.index]));
      trip.emplace_back(static_cast<int>(i), static_cast<int>(nb.index), -v);
      diag += v;
    }
    if (tess.mode == TessellationMode::clipped && !tess.cells[i].empty()) {
      if (!(tess.weights[i] > 0.0))
        throw NonpositiveWeight("nonempty clipped cell " + std::to_string(i) +
                                " has nonpositive weight");
      diag += tess.arc_length[i] / (2.0 * std::sqrt(tess.weights[i]));
    }
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
  }
  Eigen::SparseMatrix<double> jac(static_cast<int>(n), static_cast<int>(n));
  jac.setFromTriplets(trip.begin(), trip.end());
  return jac;
}

}  // namespace cellflow
