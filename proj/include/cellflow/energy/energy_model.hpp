#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "cellflow/errors.hpp"

namespace cellflow {

/// Growth constants (R, alpha, beta) with U(r) - inf U >= beta r^alpha for
/// r >= R. Recorded when known; never verified.
struct GrowthConstants {
  double R = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Internal energy density U: smooth, strictly convex, superlinear, U(0) = 0.
/// Subclasses provide U, U' and U''; the pressure and its inverse have generic
/// implementations that closed forms may override.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual double u(double r) const = 0;
  virtual double u_prime(double r) const = 0;
  virtual double u_second(double r) const = 0;
  virtual std::string name() const = 0;

  /// P(r) = r U'(r) - U(r), with P(0) = 0.
  virtual double pressure(double r) const {
    if (r < 0.0) throw NegativeDensity("pressure of negative density");
    if (r == 0.0) return 0.0;
    return r * u_prime(r) - u(r);
  }

  /// P'(r) = r U''(r).
  virtual double pressure_derivative(double r) const { return r * u_second(r); }

  /// Inverse pressure by bracketed root finding.
  virtual double pressure_inverse(double p) const {
    if (p < 0.0) throw DomainError("inverse pressure of negative value");
    if (p == 0.0) return 0.0;
    if (std::isinf(p)) return p;
    double lo = 1e-16;
    double hi = std::max(10.0, p);
    hi *= hi;
    while (pressure(lo) > p && lo > 1e-300) lo *= 1e-4;
    while (pressure(hi) < p) {
      hi *= 16.0;
      if (!std::isfinite(hi)) throw DomainError("inverse pressure does not bracket");
    }
    auto f = [&](double r) { return pressure(r) - p; };
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(
        f, lo, hi, [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::abs(b); },
        iters);
    return 0.5 * (root.first + root.second);
  }

  /// A constant with |P''| <= A U'' on (0, inf), if known.
  virtual std::optional<double> pressure_bound_constant() const { return std::nullopt; }

  std::optional<GrowthConstants> growth;
};

/// U(r) = r^gamma / (gamma - 1), so P(r) = r^gamma.
class PowerEnergy final : public EnergyModel {
 public:
  explicit PowerEnergy(double gamma) : gamma_(gamma) {
    if (!(gamma > 1.0)) throw DomainError("power energy needs gamma > 1");
    growth = GrowthConstants{1.0, gamma, 1.0 / (gamma - 1.0)};
  }

  double gamma() const { return gamma_; }

  double u(double r) const override { return std::pow(r, gamma_) / (gamma_ - 1.0); }
  double u_prime(double r) const override {
    return gamma_ / (gamma_ - 1.0) * std::pow(r, gamma_ - 1.0);
  }
  double u_second(double r) const override { return gamma_ * std::pow(r, gamma_ - 2.0); }
  std::string name() const override { return "power"; }

  double pressure(double r) const override {
    if (r < 0.0) throw NegativeDensity("pressure of negative density");
    return std::pow(r, gamma_);
  }
  double pressure_derivative(double r) const override {
    return gamma_ * std::pow(r, gamma_ - 1.0);
  }
  double pressure_inverse(double p) const override {
    if (p < 0.0) throw DomainError("inverse pressure of negative value");
    return std::pow(p, 1.0 / gamma_);
  }
  std::optional<double> pressure_bound_constant() const override { return gamma_ - 1.0; }

 private:
  double gamma_;
};

inline std::shared_ptr<const EnergyModel> make_energy(const std::string& family, double gamma) {
  if (family == "power") return std::make_shared<PowerEnergy>(gamma);
  throw ConfigError("unknown energy family '" + family + "'");
}

inline double pressure(const EnergyModel& model, double r) { return model.pressure(r); }

/// Derivative of the conjugate cell cost, (C*)'(s) = m / P^{-1}(-s) for s < 0.
inline double cstar_prime(const EnergyModel& model, double mass, double s) {
  if (!(s < 0.0)) throw DomainError("(C*)' is only finite for negative arguments");
  return mass / model.pressure_inverse(-s);
}

/// (C*)''(s) = m / (r^3 U''(r)) with r = P^{-1}(-s).
inline double cstar_second(const EnergyModel& model, double mass, double s) {
  if (!(s < 0.0)) throw DomainError("(C*)'' is only finite for negative arguments");
  const double r = model.pressure_inverse(-s);
  return mass / (r * r * r * model.u_second(r));
}

/// C*(s) = sup_a (s a - C(a)) = -m U'(P^{-1}(-s)) for s <= 0, +inf for s > 0.
inline double cstar(const EnergyModel& model, double mass, double s) {
  if (s > 0.0) return std::numeric_limits<double>::infinity();
  return -mass * model.u_prime(model.pressure_inverse(-s));
}

/// C(a) = U(m / a) a for a > 0, +inf otherwise.
inline double cell_cost(const EnergyModel& model, double mass, double area) {
  if (!(area > 0.0)) return std::numeric_limits<double>::infinity();
  return model.u(mass / area) * area;
}

/// U(r|s) = U(r) - U(s) - U'(s)(r - s).
inline double relative_entropy_kernel(const EnergyModel& model, double r, double s) {
  if (!(s > 0.0)) throw DomainError("relative entropy needs s > 0");
  if (r < 0.0) throw NegativeDensity("relative entropy of negative density");
  const double v = model.u(r) - model.u(s) - model.u_prime(s) * (r - s);
  return std::max(v, 0.0);
}

/// P(r|s) = P(r) - P(s) - P'(s)(r - s).
inline double relative_pressure_kernel(const EnergyModel& model, double r, double s) {
  if (!(s > 0.0)) throw DomainError("relative pressure needs s > 0");
  if (r < 0.0) throw NegativeDensity("relative pressure of negative density");
  return model.pressure(r) - model.pressure(s) - model.pressure_derivative(s) * (r - s);
}

}  // namespace cellflow
