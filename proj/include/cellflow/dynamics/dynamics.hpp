#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cellflow/energy/potential.hpp"
#include "cellflow/errors.hpp"
#include "cellflow/geometry/vec2.hpp"
#include "cellflow/solver/dual_solver.hpp"
#include "cellflow/solver/particle_system.hpp"

namespace cellflow {

namespace detail {

inline void require_fresh(const ParticleSystem& sys, const SolverState& state) {
  const auto& p = state.tessellation.positions;
  if (p.size() != sys.size() || state.weights.size() != sys.size())
    throw StaleState("solver state does not match the particle count");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] == sys.positions[i])) throw StaleState("solver state was built for other positions");
}

}  // namespace detail

/// dx_i/dt = -(|L_i| / m_i) (x_i - b_i) / eps.
inline std::vector<Vec2> velocity(const ParticleSystem& sys, const SolverState& state) {
  detail::require_fresh(sys, state);
  std::vector<Vec2> v(sys.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Cell& c = state.tessellation.cells[i];
    v[i] = -(c.area / (sys.masses[i] * sys.epsilon)) * (sys.positions[i] - c.barycenter);
  }
  return v;
}

struct StepResult {
  std::vector<Vec2> positions;
  SolverState state;
};

/// Exponential step with cells frozen: x <- b + exp(-|L| tau / (m eps)) (x - b).
inline StepResult step(const ParticleSystem& sys, const SolverState& state, double tau,
                       const SolverOptions& opt = {}, const std::vector<double>* guess = nullptr) {
  detail::require_fresh(sys, state);
  StepResult out;
  out.positions.resize(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Cell& c = state.tessellation.cells[i];
    const double decay = std::exp(-c.area * tau / (sys.masses[i] * sys.epsilon));
    out.positions[i] = c.barycenter + decay * (sys.positions[i] - c.barycenter);
  }
  out.state = solve_weights(sys.with_positions(out.positions), guess ? *guess : state.weights, opt);
  return out;
}

/// Exponential step for V = |x - c|^2 / 2, exact for the frozen-cell ODE.
inline StepResult step_with_potential(const ParticleSystem& sys, const SolverState& state,
                                      double tau, const Potential& pot,
                                      const SolverOptions& opt = {},
                                      const std::vector<double>* guess = nullptr) {
  if (pot.kind() == Potential::Kind::none) return step(sys, state, tau, opt, guess);
  if (pot.kind() != Potential::Kind::quadratic)
    throw UnsupportedPotential("closed-form step needs a quadratic potential");
  detail::require_fresh(sys, state);
  StepResult out;
  out.positions.resize(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Cell& c = state.tessellation.cells[i];
    const double lambda = c.area / (sys.masses[i] * sys.epsilon) + 1.0;
    const Vec2 target = c.barycenter + (pot.center() - c.barycenter) / lambda;
    out.positions[i] = target + std::exp(-lambda * tau) * (sys.positions[i] - target);
  }
  out.state = solve_weights(sys.with_positions(out.positions), guess ? *guess : state.weights, opt);
  return out;
}

/// Lie splitting for arbitrary V: exponential cell step, then x <- x - tau grad V(x).
inline StepResult step_split(const ParticleSystem& sys, const SolverState& state, double tau,
                             const Potential& pot, const SolverOptions& opt = {},
                             const std::vector<double>* guess = nullptr) {
  detail::require_fresh(sys, state);
  std::vector<Vec2> x(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Cell& c = state.tessellation.cells[i];
    const double decay = std::exp(-c.area * tau / (sys.masses[i] * sys.epsilon));
    x[i] = c.barycenter + decay * (sys.positions[i] - c.barycenter);
    x[i] = x[i] - tau * pot.gradient(x[i]);
  }
  StepResult out;
  out.state = solve_weights(sys.with_positions(x), guess ? *guess : state.weights, opt);
  out.positions = std::move(x);
  return out;
}

/// Dispatches on the potential kind. `guess` replaces the old weights as the
/// Newton starting point when given.
inline StepResult advance(const ParticleSystem& sys, const SolverState& state, double tau,
                          const Potential& pot, const SolverOptions& opt = {},
                          const std::vector<double>* guess = nullptr) {
  switch (pot.kind()) {
    case Potential::Kind::none:
      return step(sys, state, tau, opt, guess);
    case Potential::Kind::quadratic:
      return step_with_potential(sys, state, tau, pot, opt, guess);
    case Potential::Kind::custom:
      return step_split(sys, state, tau, pot, opt, guess);
  }
  throw UnsupportedPotential("unknown potential kind");
}

/// F_eps(X) + sum_i V(x_i) m_i on a converged state.
inline double total_energy(const ParticleSystem& sys, const SolverState& state,
                           const Potential& pot) {
  double e = primal_value(sys, state.tessellation);
  if (pot.kind() != Potential::Kind::none)
    for (std::size_t i = 0; i < sys.size(); ++i) e += pot.value(sys.positions[i]) * sys.masses[i];
  return e;
}

struct Snapshot {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<Vec2> positions;
  std::vector<double> weights;
  std::vector<double> areas;
};

struct TrajectoryRecord {
  std::vector<double> times;     // every step, starting at t0
  std::vector<double> energies;  // F_eps, or Z_eps with a potential
  std::vector<double> internal;  // sum_i U(m_i/|L_i|)|L_i|
  std::vector<Snapshot> snapshots;
  std::size_t newton_iterations = 0;
  double tau = 0.0;  // step actually used
  ParticleSystem final_system;
  SolverState final_state;
};

struct SimulationSetup {
  ParticleSystem system;
  Potential potential = Potential::none();
  double t0 = 0.0;
  double t_end = 1.0;
  double tau = 1e-2;
  /// Requested snapshot times; t0 and t_end are always recorded.
  std::vector<double> snapshot_times;
  bool check_dissipation = true;
  /// Polynomial order (0, 1 or 2) of the weight predictor used as Newton start.
  int extrapolation = 2;
  SolverOptions solver{};
  /// Called after the initial solve and after every step.
  std::function<void(std::size_t step, double t, const ParticleSystem&, const SolverState&)>
      observer;
  /// Streaming hooks, called as rows are recorded.
  std::function<void(std::size_t step, double t, double energy, double internal)> on_energy;
  std::function<void(const Snapshot&)> on_snapshot;
};

/// Number of steps and the uniform step that lands exactly on t_end.
inline std::pair<std::size_t, double> step_plan(double t0, double t_end, double tau) {
  if (!(tau > 0.0)) throw ConfigError("time step must be positive");
  if (!(t_end > t0)) throw ConfigError("final time must exceed initial time");
  const double ratio = (t_end - t0) / tau;
  auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
  if (steps == 0) steps = 1;
  return {steps, (t_end - t0) / static_cast<double>(steps)};
}

/// Extrapolates the last weights (newest last); false when the prediction
/// is unavailable or leaves the positive orthant.
inline bool predict_weights(const std::vector<std::vector<double>>& history, int order,
                            std::vector<double>& out) {
  const int k = std::min(order, static_cast<int>(history.size()) - 1);
  if (k <= 0) return false;
  const auto& a = history[history.size() - 1];
  const auto& b = history[history.size() - 2];
  out.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = k == 1 ? 2.0 * a[i] - b[i]
                    : 3.0 * a[i] - 3.0 * b[i] + history[history.size() - 3][i];
    if (!(out[i] > 0.0)) return false;
  }
  return true;
}

inline TrajectoryRecord simulate(const SimulationSetup& setup) {
  const auto [steps, tau] = step_plan(setup.t0, setup.t_end, setup.tau);
  ParticleSystem sys = setup.system;
  sys.validate();

  std::vector<std::size_t> snapshot_steps{0, steps};
  for (double s : setup.snapshot_times) {
    if (s < setup.t0 || s > setup.t_end) continue;
    snapshot_steps.push_back(static_cast<std::size_t>(std::llround((s - setup.t0) / tau)));
  }
  std::sort(snapshot_steps.begin(), snapshot_steps.end());
  snapshot_steps.erase(std::unique(snapshot_steps.begin(), snapshot_steps.end()),
                       snapshot_steps.end());
  auto next_snapshot = snapshot_steps.begin();

  TrajectoryRecord rec;
  rec.tau = tau;
  rec.times.reserve(steps + 1);
  rec.energies.reserve(steps + 1);
  rec.internal.reserve(steps + 1);

  SolverState state = solve_weights(sys, std::nullopt, setup.solver);
  rec.newton_iterations += static_cast<std::size_t>(state.iterations);

  auto record = [&](std::size_t n, double t) {
    rec.times.push_back(t);
    rec.energies.push_back(total_energy(sys, state, setup.potential));
    rec.internal.push_back(internal_energy(sys, state.tessellation));
    if (setup.on_energy) setup.on_energy(n, t, rec.energies.back(), rec.internal.back());
    if (next_snapshot != snapshot_steps.end() && *next_snapshot == n) {
      rec.snapshots.push_back({n, t, sys.positions, state.weights, state.tessellation.areas()});
      if (setup.on_snapshot) setup.on_snapshot(rec.snapshots.back());
      ++next_snapshot;
    }
    if (setup.observer) setup.observer(n, t, sys, state);
  };
  record(0, setup.t0);

  std::vector<std::vector<double>> history{state.weights};
  std::vector<double> guess;
  for (std::size_t n = 1; n <= steps; ++n) {
    const bool predict = predict_weights(history, setup.extrapolation, guess);
    StepResult r = advance(sys, state, tau, setup.potential, setup.solver, predict ? &guess : nullptr);
    sys.positions = std::move(r.positions);
    state = std::move(r.state);
    history.push_back(state.weights);
    if (history.size() > 3) history.erase(history.begin());
    rec.newton_iterations += static_cast<std::size_t>(state.iterations);
    const double t = n == steps ? setup.t_end : setup.t0 + static_cast<double>(n) * tau;
    const double before = rec.energies.back();
    record(n, t);
    const double after = rec.energies.back();
    if (setup.check_dissipation && after > before + 1e-12 * (1.0 + std::abs(before)))
      throw DissipationViolation("energy increased at step " + std::to_string(n), n, before, after);
  }
  rec.final_system = std::move(sys);
  rec.final_state = std::move(state);
  return rec;
}

}  // namespace cellflow
