#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cellflow/analysis/barenblatt.hpp"
#include "cellflow/analysis/metrics.hpp"
#include "cellflow/dynamics/dynamics.hpp"
#include "cellflow/energy/energy_model.hpp"
#include "cellflow/geometry/domain.hpp"

namespace cellflow {

/// How epsilon and tau follow from N.
struct SchemeRule {
  double eps_scale = 10.0;  // eps = eps_scale / N^eps_power
  double eps_power = 1.0;
  double tau_scale = 10.0;  // tau = tau_scale / N^tau_power
  double tau_power = 2.0;

  double epsilon(std::size_t n) const { return eps_scale / std::pow(static_cast<double>(n), eps_power); }
  double tau(std::size_t n) const { return tau_scale / std::pow(static_cast<double>(n), tau_power); }

  static SchemeRule paper() { return {}; }
};

struct BarenblattRun {
  BarenblattSpec spec{};
  std::size_t n = 100;
  double epsilon = 0.1;
  double tau = 1e-3;
  double t_end = 1.0;
  int lloyd_iterations = 20;
  double domain_half_width = 2.0;
  TessellationMode mode = TessellationMode::clipped;
  std::vector<double> snapshot_times;
  int extrapolation = 2;
  SolverOptions solver{};
  /// Evaluate the relative internal energy every this many steps (0 = never).
  std::size_t relative_energy_stride = 0;
  /// Reuse precomputed initial data instead of rebuilding it.
  std::optional<InitialData> initial;
  std::function<void(std::size_t, double, double, double)> on_energy;
  std::function<void(const Snapshot&)> on_snapshot;
};

struct BarenblattResult {
  InitialData initial;
  TrajectoryRecord trajectory;
  std::vector<Vec2> exact_final;
  double error = 0.0;
  /// (time, relative internal energy) samples, when requested.
  std::vector<std::pair<double, double>> relative_energy;
  double seconds = 0.0;
};

inline BarenblattResult run_barenblatt(const BarenblattRun& run) {
  const auto start = std::chrono::steady_clock::now();
  BarenblattResult out;
  out.initial = run.initial ? *run.initial : build_initial_data(run.spec, run.n, run.lloyd_iterations);

  SimulationSetup setup;
  setup.system.domain = std::make_shared<const Domain>(
      Domain::square(-run.domain_half_width, run.domain_half_width));
  setup.system.energy = std::make_shared<PowerEnergy>(run.spec.gamma);
  setup.system.positions = out.initial.positions;
  setup.system.masses = out.initial.masses;
  setup.system.epsilon = run.epsilon;
  setup.system.mode = run.mode;
  setup.t0 = run.spec.t0;
  setup.t_end = run.t_end;
  setup.tau = run.tau;
  setup.snapshot_times = run.snapshot_times;
  setup.solver = run.solver;
  setup.extrapolation = run.extrapolation;
  setup.on_energy = run.on_energy;
  setup.on_snapshot = run.on_snapshot;
  if (run.relative_energy_stride > 0) {
    const auto [steps, tau] = step_plan(run.spec.t0, run.t_end, run.tau);
    (void)tau;
    setup.observer = [&, steps = steps](std::size_t n, double t, const ParticleSystem& sys,
                                        const SolverState& state) {
      if (n % run.relative_energy_stride != 0 && n != steps) return;
      RelativeEnergyOptions opt;
      opt.allow_vacuum = true;
      const auto rho = [&](Vec2 x) { return run.spec.density(t, x); };
      double value = relative_internal_energy(state.tessellation, sys.masses, *sys.energy, rho, opt);
      // region left uncovered by the cells carries U(0|rho) = P(rho)
      value += std::max(run.spec.pressure_integral(t) -
                            covered_pressure(state.tessellation, *sys.energy, rho),
                        0.0);
      out.relative_energy.emplace_back(t, value);
    };
  }
  out.trajectory = simulate(setup);

  out.exact_final.resize(run.n);
  for (std::size_t i = 0; i < run.n; ++i)
    out.exact_final[i] = run.spec.flow(run.t_end, out.initial.positions[i]);
  out.error = flow_error(out.trajectory.final_system.positions, out.exact_final, out.initial.masses);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct StudyRow {
  double gamma = 0.0;
  std::size_t n = 0;
  double inv_sqrt_n = 0.0;
  double epsilon = 0.0;
  double tau = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
  double rate = std::numeric_limits<double>::quiet_NaN();  // NaN on the coarsest level
  double delta_n = 0.0;
  std::size_t steps = 0;
  double seconds = 0.0;
  std::string failure;  // empty on success
};

struct StudyOptions {
  SchemeRule rule = SchemeRule::paper();
  BarenblattSpec base{};
  double t_end = 1.0;
  int lloyd_iterations = 20;
  double domain_half_width = 2.0;
  TessellationMode mode = TessellationMode::clipped;
  unsigned workers = 1;
  SolverOptions solver{};
  std::function<void(const StudyRow&)> on_row;
};

/// Runs every (gamma, N) pair, then fills successive rates per gamma.
inline std::vector<StudyRow> convergence_study(const std::vector<double>& gammas,
                                               const std::vector<std::size_t>& ns,
                                               const StudyOptions& opt = {}) {
  for (std::size_t k = 1; k < ns.size(); ++k)
    if (ns[k] <= ns[k - 1]) throw ConfigError("particle counts must increase");
  std::vector<StudyRow> rows;
  for (double g : gammas)
    for (std::size_t n : ns) {
      StudyRow r;
      r.gamma = g;
      r.n = n;
      r.inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
      r.epsilon = opt.rule.epsilon(n);
      r.tau = opt.rule.tau(n);
      rows.push_back(r);
    }

  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto work = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      StudyRow& r = rows[k];
      BarenblattRun run;
      run.spec = opt.base;
      run.spec.gamma = r.gamma;
      run.n = r.n;
      run.epsilon = r.epsilon;
      run.tau = r.tau;
      run.t_end = opt.t_end;
      run.lloyd_iterations = opt.lloyd_iterations;
      run.domain_half_width = opt.domain_half_width;
      run.mode = opt.mode;
      run.solver = opt.solver;
      try {
        const BarenblattResult res = run_barenblatt(run);
        r.error = res.error;
        r.delta_n = res.initial.delta_n;
        r.steps = res.trajectory.times.size() - 1;
        r.seconds = res.seconds;
      } catch (const std::exception& e) {
        r.failure = e.what();
      }
      if (opt.on_row) {
        std::lock_guard lock(report);
        opt.on_row(r);
      }
    }
  };
  const unsigned workers = std::max(1u, opt.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].gamma == rows[k - 1].gamma && rows[k].failure.empty() && rows[k - 1].failure.empty())
      rows[k].rate = convergence_rate(rows[k - 1].error, rows[k].error,
                                      static_cast<double>(rows[k - 1].n),
                                      static_cast<double>(rows[k].n));
  return rows;
}

}  // namespace cellflow
