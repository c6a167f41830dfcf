#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "cellflow/analysis/quadrature.hpp"
#include "cellflow/energy/energy_model.hpp"
#include "cellflow/errors.hpp"
#include "cellflow/geometry/tessellation.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// Mass-weighted l2 distance sqrt(sum_i m_i |x_i - y_i|^2).
inline double flow_error(std::span<const Vec2> x, std::span<const Vec2> y,
                         std::span<const double> masses) {
  if (x.size() != y.size() || x.size() != masses.size())
    throw LengthMismatch("flow error needs equally long inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += masses[i] * norm2(x[i] - y[i]);
  return std::sqrt(s);
}

struct RelativeEnergyOptions {
  QuadratureOptions quadrature{};
  /// Where rho vanishes use U(r|0) = U(r) - U(0) - U'(0) r instead of failing.
  bool allow_vacuum = false;
};

/// sum_i int_{L_i} U(m_i/|L_i| | rho(x)) dx by per-cell quadrature.
inline double relative_internal_energy(const Tessellation& tess, std::span<const double> masses,
                                       const EnergyModel& model,
                                       const std::function<double(Vec2)>& rho,
                                       const RelativeEnergyOptions& opt = {}) {
  if (masses.size() != tess.size()) throw LengthMismatch("one mass per cell expected");
  const double du0 = model.u_prime(0.0);
  if (opt.allow_vacuum && !std::isfinite(du0))
    throw DomainError("vacuum extension needs a finite U'(0)");
  double total = 0.0;
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const Cell& c = tess.cells[i];
    if (!(c.area > 0.0)) continue;
    const double mu = masses[i] / c.area;
    const double u_mu = model.u(mu);
    total += integrate_over_cell(c, [&](Vec2 x) {
      const double s = rho(x);
      if (s > 0.0) return relative_entropy_kernel(model, mu, s);
      if (!opt.allow_vacuum) throw NonpositiveDensity("reference density vanishes on a cell");
      return u_mu - model.u(0.0) - du0 * mu;
    }, opt.quadrature);
  }
  return total;
}

/// sum_i int_{L_i} P(rho): subtract from int_Omega P(rho) to get the part of
/// U(0|rho) = P(rho) carried by the region no cell covers.
inline double covered_pressure(const Tessellation& tess, const EnergyModel& model,
                               const std::function<double(Vec2)>& rho,
                               const QuadratureOptions& quad = {}) {
  double total = 0.0;
  for (const auto& c : tess.cells)
    if (c.area > 0.0)
      total += integrate_over_cell(c, [&](Vec2 x) { return model.pressure(std::max(rho(x), 0.0)); }, quad);
  return total;
}

/// Stationary profile for U = r^2 with V = |x - c|^2 / 2.
struct EquilibriumProfile {
  double mass = 0.0;
  Vec2 center;
  double height = 0.0;  // sqrt(M / 2 pi)

  double density(Vec2 x) const { return std::max(height - 0.25 * norm2(x - center), 0.0); }
  double support_radius() const { return 2.0 * std::sqrt(height); }
  /// int rho^2 dx = (4 pi / 3) (M / 2 pi)^(3/2).
  double internal_energy() const { return 4.0 * std::numbers::pi / 3.0 * height * height * height; }
};

inline EquilibriumProfile equilibrium_profile(double mass, Vec2 center = {}) {
  if (!(mass > 0.0)) throw DomainError("equilibrium profile needs positive mass");
  return {mass, center, std::sqrt(mass / (2.0 * std::numbers::pi))};
}

/// log2(e_prev / e) / log2(sqrt(n / n_prev)).
inline double convergence_rate(double e_prev, double e, double n_prev, double n) {
  return std::log2(e_prev / e) / std::log2(std::sqrt(n / n_prev));
}

}  // namespace cellflow
