#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "cellflow/analysis/quadrature.hpp"
#include "cellflow/errors.hpp"
#include "cellflow/geometry/cell.hpp"
#include "cellflow/geometry/domain.hpp"
#include "cellflow/geometry/tessellation.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// Self-similar porous-medium solution in the plane,
/// rho(t,x) = t^-alpha (C^2 - k t^-2beta |x|^2)_+^(1/(gamma-1)).
struct BarenblattSpec {
  double gamma = 2.0;
  double C = 1.0 / 3.0;
  double t0 = 1.0 / 16.0;
  int d = 2;

  double alpha() const { return d / (d * (gamma - 1.0) + 2.0); }
  double beta() const { return alpha() / d; }
  double k() const { return beta() * (gamma - 1.0) / (2.0 * gamma); }
  double exponent() const { return 1.0 / (gamma - 1.0); }

  double density(double t, Vec2 x) const {
    const double base = C * C - k() * std::pow(t, -2.0 * beta()) * norm2(x);
    if (base <= 0.0) return 0.0;
    return std::pow(t, -alpha()) * std::pow(base, exponent());
  }

  double support_radius(double t) const { return C * std::pow(t, beta()) / std::sqrt(k()); }

  /// Exact Lagrangian flow started at t0.
  Vec2 flow(double t, Vec2 x) const { return std::pow(t / t0, beta()) * x; }

  /// Mass of rho(t) inside the disk of radius r about the origin.
  double cumulative_mass(double t, double r) const {
    const double q = k() * std::pow(t, -2.0 * beta());
    const double e = exponent() + 1.0;
    const double inner = std::max(C * C - q * r * r, 0.0);
    return std::numbers::pi * std::pow(t, -alpha()) / (q * e) *
           (std::pow(C * C, e) - std::pow(inner, e));
  }

  double total_mass(double t) const { return cumulative_mass(t, support_radius(t)); }

  /// int P(rho(t)) dx with P(r) = r^gamma.
  double pressure_integral(double t) const {
    const double q = k() * std::pow(t, -2.0 * beta());
    const double e = gamma * exponent() + 1.0;
    return std::numbers::pi * std::pow(t, -alpha() * gamma) / (q * e) * std::pow(C * C, e);
  }
};

/// Radial map Phi from the reference disk of area M (density one) onto the
/// support of rho(t0): pi s^2 = m(R(s)).
class RadialMap {
 public:
  explicit RadialMap(const BarenblattSpec& spec)
      : spec_(spec),
        mass_(spec.total_mass(spec.t0)),
        ref_radius_(std::sqrt(mass_ / std::numbers::pi)),
        support_(spec.support_radius(spec.t0)) {}

  double reference_radius() const { return ref_radius_; }
  double total_mass() const { return mass_; }

  /// R(s) by bracketed root finding on [0, support].
  double radius(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= ref_radius_) return support_;
    const double target = std::numbers::pi * s * s;
    auto f = [&](double r) { return spec_.cumulative_mass(spec_.t0, r) - target; };
    const double flo = f(0.0), fhi = f(support_);
    if (!(flo <= 0.0 && fhi >= 0.0)) throw QuadratureFailure("radial map root is not bracketed");
    if (flo == 0.0) return 0.0;
    if (fhi == 0.0) return support_;
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(
        f, 0.0, support_, flo, fhi,
        [&](double a, double b) { return std::abs(b - a) <= 1e-12 * support_; }, iters);
    if (iters >= 200) throw QuadratureFailure("radial map root finding did not converge");
    return 0.5 * (root.first + root.second);
  }

  Vec2 operator()(Vec2 y) const {
    const double s = norm(y);
    if (s == 0.0) return {};
    return (radius(s) / s) * y;
  }

  /// Operator norm of the Jacobian: max(R'(s), R(s)/s).
  double jacobian_norm(Vec2 y) const {
    const double s = norm(y);
    if (s == 0.0) return 1.0 / std::sqrt(spec_.density(spec_.t0, {}));
    const double r = radius(s);
    const double rho = spec_.density(spec_.t0, {r, 0.0});
    const double radial = rho > 0.0 ? s / (rho * r) : std::numeric_limits<double>::infinity();
    return std::max(radial, r / s);
  }

 private:
  BarenblattSpec spec_;
  double mass_;
  double ref_radius_;
  double support_;
};

struct InitialData {
  std::vector<Vec2> positions;
  std::vector<double> masses;
  double delta_n = 0.0;
  /// Largest reference cell diameter.
  double h_n = 0.0;
  /// Largest Jacobian norm of Phi over the quadrature nodes.
  double grad_phi_max = 0.0;
  double reference_radius = 0.0;
  double total_mass = 0.0;
  std::size_t seeds = 0;
  int lloyd_iterations = 0;
};

/// Golden-angle spiral of n points filling the disk of radius r.
inline std::vector<Vec2> sunflower(std::size_t n, double r) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec2> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : r * std::sqrt((i + 0.5) / static_cast<double>(n));
    const double th = golden * static_cast<double>(i);
    pts[i] = {s * std::cos(th), s * std::sin(th)};
  }
  return pts;
}

/// Voronoi cells of the seeds restricted to the disk B(0, r).
inline std::vector<Cell> disk_voronoi(const std::vector<Vec2>& seeds, double r) {
  const Domain box = Domain::square(-1.01 * r, 1.01 * r);
  const std::vector<double> zero(seeds.size(), 0.0);
  Tessellation t = build_tessellation(box, seeds, zero, TessellationMode::full);
  std::vector<Cell> cells(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    cells[i] = intersect_with_disk(t.cells[i], {}, r);
  return cells;
}

/// Particles, masses and projection error delta_N for the Barenblatt data.
inline InitialData build_initial_data(const BarenblattSpec& spec, std::size_t n, int lloyd_iters,
                                      const QuadratureOptions& quad = {}) {
  if (n == 0) throw ConfigError("need at least one particle");
  const RadialMap phi(spec);
  const double r = phi.reference_radius();

  std::vector<Vec2> seeds = sunflower(n, r);
  std::vector<Cell> cells = disk_voronoi(seeds, r);
  for (int it = 0; it < lloyd_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i)
      if (cells[i].area > 0.0) seeds[i] = cells[i].barycenter;
    cells = disk_voronoi(seeds, r);
  }

  InitialData out;
  out.seeds = n;
  out.lloyd_iterations = lloyd_iters;
  out.reference_radius = r;
  out.total_mass = phi.total_mass();
  out.positions.resize(n);
  out.masses.resize(n);
  double err2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Cell& c = cells[i];
    if (!(c.area > 0.0)) throw QuadratureFailure("empty reference cell");
    out.masses[i] = c.area;
    const Vec2 mean = integrate_over_cell<Vec2>(c, [&](Vec2 y) { return phi(y); }, quad) / c.area;
    out.positions[i] = mean;
    err2 += integrate_over_cell(c, [&](Vec2 y) { return norm2(phi(y) - mean); }, quad);
    integrate_over_cell(c, [&](Vec2 y) {
      out.grad_phi_max = std::max(out.grad_phi_max, phi.jacobian_norm(y));
      return 0.0;
    }, quad);
    out.h_n = std::max(out.h_n, cell_diameter(c));
  }
  out.delta_n = std::sqrt(std::max(err2, 0.0));
  return out;
}

}  // namespace cellflow
