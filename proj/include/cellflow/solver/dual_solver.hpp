#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cellflow/energy/energy_model.hpp"
#include "cellflow/errors.hpp"
#include "cellflow/geometry/tessellation.hpp"
#include "cellflow/solver/particle_system.hpp"

namespace cellflow {

/// One Newton iteration, as reported to SolverOptions::log.
struct NewtonRecord {
  int iteration = 0;
  double residual = 0.0;       // scaled optimality residual
  double area_residual = 0.0;  // max |(C*)' - |L_i||
  double dual = 0.0;
  double step = 0.0;           // accepted damping factor (0 before the first step)
  double min_area = 0.0;
};

struct SolverOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  int max_halvings = 50;
  TessellationOptions geometry{};
  std::function<void(const NewtonRecord&)> log;
};

/// Weights together with the tessellation they generate.
struct SolverState {
  std::vector<double> weights;
  Tessellation tessellation;
  /// max_i |P(m_i/|L_i|) - w_i/(2 eps)|.
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

inline Tessellation tessellate(const ParticleSystem& sys, std::span<const double> w,
                               const TessellationOptions& opt = {}) {
  return build_tessellation(*sys.domain, sys.positions, w, sys.mode, opt);
}

/// Uniform-area guess w_i = 2 eps P(m_i N / |Omega|).
inline std::vector<double> initial_weights(const ParticleSystem& sys) {
  const double n = static_cast<double>(sys.size());
  std::vector<double> w(sys.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = 2.0 * sys.epsilon * sys.energy->pressure(sys.masses[i] * n / sys.domain->area());
  return w;
}

namespace detail {

inline double dual_value_of(const ParticleSystem& sys, const Tessellation& tess) {
  const double two_eps = 2.0 * sys.epsilon;
  double value = 0.0;
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const double w = tess.weights[i];
    if (w < 0.0) return -std::numeric_limits<double>::infinity();
    const Cell& c = tess.cells[i];
    value += (c.second_moment - w * c.area) / two_eps - cstar(*sys.energy, sys.masses[i], -w / two_eps);
  }
  return value;
}

inline double optimality_residual(const ParticleSystem& sys, const Tessellation& tess) {
  const double two_eps = 2.0 * sys.epsilon;
  double res = 0.0;
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const double a = tess.cells[i].area;
    if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
    res = std::max(res, std::abs(sys.energy->pressure(sys.masses[i] / a) - tess.weights[i] / two_eps));
  }
  return res;
}

// (C*)'(-w_i/2eps) - |L_i|, i.e. 2 eps times the dual gradient.
inline std::vector<double> area_mismatch(const ParticleSystem& sys, const Tessellation& tess) {
  const double two_eps = 2.0 * sys.epsilon;
  std::vector<double> g(tess.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = cstar_prime(*sys.energy, sys.masses[i], -tess.weights[i] / two_eps) - tess.cells[i].area;
  return g;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Symbolic factorization reused while the sparsity pattern is unchanged.
class NewtonLinearSolver {
 public:
  bool factorize(const Eigen::SparseMatrix<double>& m) {
    const auto nnz = static_cast<std::size_t>(m.nonZeros());
    const auto cols = static_cast<std::size_t>(m.outerSize());
    const bool same = analyzed_ && outer_.size() == cols + 1 && inner_.size() == nnz &&
                      std::equal(outer_.begin(), outer_.end(), m.outerIndexPtr()) &&
                      std::equal(inner_.begin(), inner_.end(), m.innerIndexPtr());
    if (!same) {
      ldlt_.analyzePattern(m);
      outer_.assign(m.outerIndexPtr(), m.outerIndexPtr() + cols + 1);
      inner_.assign(m.innerIndexPtr(), m.innerIndexPtr() + nnz);
      analyzed_ = true;
    }
    ldlt_.factorize(m);
    if (ldlt_.info() != Eigen::Success) {
      analyzed_ = false;
      return false;
    }
    return true;
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  std::vector<int> outer_, inner_;
  bool analyzed_ = false;
};

inline NewtonLinearSolver& thread_linear_solver() {
  thread_local NewtonLinearSolver solver;
  return solver;
}

inline double min_positive_area(const Tessellation& tess) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : tess.cells)
    if (c.area > 0.0) m = std::min(m, c.area);
  return m;
}

}  // namespace detail

/// D_eps(X; w) = sum_i int_{L_i*} (|x-x_i|^2 - w_i)/(2 eps) dx - C_i*(-w_i/(2 eps)).
/// Returns -inf outside the effective domain (some w_i < 0).
inline double dual_value(const ParticleSystem& sys, std::span<const double> w,
                         const TessellationOptions& opt = {}) {
  sys.validate();
  for (double v : w)
    if (v < 0.0) return -std::numeric_limits<double>::infinity();
  return detail::dual_value_of(sys, tessellate(sys, w, opt));
}

/// dD/dw_i = [(C_i*)'(-w_i/(2 eps)) - |L_i*|] / (2 eps), for w > 0.
inline std::vector<double> dual_gradient(const ParticleSystem& sys, std::span<const double> w,
                                         const TessellationOptions& opt = {}) {
  sys.validate();
  for (double v : w)
    if (!(v > 0.0)) throw DomainError("dual gradient needs positive weights");
  auto g = detail::area_mismatch(sys, tessellate(sys, w, opt));
  for (double& v : g) v /= 2.0 * sys.epsilon;
  return g;
}

/// Hessian of D_eps(X; .) at w > 0 (symmetric, negative definite).
inline Eigen::SparseMatrix<double> dual_hessian(const ParticleSystem& sys,
                                                const Tessellation& tess) {
  const double two_eps = 2.0 * sys.epsilon;
  Eigen::SparseMatrix<double> h = area_jacobian(tess, sys.positions);
  for (std::size_t i = 0; i < tess.size(); ++i)
    h.coeffRef(static_cast<int>(i), static_cast<int>(i)) +=
        cstar_second(*sys.energy, sys.masses[i], -tess.weights[i] / two_eps) / two_eps;
  return (-1.0 / two_eps) * h;
}

/// Maximizes the dual by damped Newton on the optimality system
/// P(m_i / |L_i|) = w_i / (2 eps).
inline SolverState solve_weights(const ParticleSystem& sys,
                                 const std::optional<std::vector<double>>& warm_start = {},
                                 const SolverOptions& opt = {}) {
  sys.validate();
  const std::size_t n = sys.size();
  const double two_eps = 2.0 * sys.epsilon;

  std::vector<double> w;
  if (warm_start) {
    if (warm_start->size() != n) throw LengthMismatch("warm start has wrong length");
    w = *warm_start;
    if (std::any_of(w.begin(), w.end(), [](double v) { return !(v > 0.0); }))
      w = initial_weights(sys);
  } else {
    w = initial_weights(sys);
  }

  SolverState state;
  state.tessellation = tessellate(sys, w, opt.geometry);
  auto g = detail::area_mismatch(sys, state.tessellation);
  double gnorm = detail::max_abs(g);
  double dual = detail::dual_value_of(sys, state.tessellation);
  double best = std::numeric_limits<double>::infinity();
  double last_step = 0.0;

  detail::NewtonLinearSolver& linear = detail::thread_linear_solver();
  for (int it = 0;; ++it) {
    state.residual = detail::optimality_residual(sys, state.tessellation);
    best = std::min(best, state.residual);
    const double wmax = *std::max_element(w.begin(), w.end());
    if (opt.log)
      opt.log({it, state.residual, gnorm, dual, last_step,
               detail::min_positive_area(state.tessellation)});
    if (state.residual <= opt.tolerance * (1.0 + wmax / two_eps)) {
      state.weights = std::move(w);
      state.iterations = it;
      return state;
    }
    if (it >= opt.max_iterations)
      throw NewtonFailure("Newton did not converge in " + std::to_string(it) + " iterations",
                          best, it);

    Eigen::SparseMatrix<double> m = area_jacobian(state.tessellation, sys.positions);
    for (std::size_t i = 0; i < n; ++i)
      m.coeffRef(static_cast<int>(i), static_cast<int>(i)) +=
          cstar_second(*sys.energy, sys.masses[i], -w[i] / two_eps) / two_eps;
    m.makeCompressed();
    if (!linear.factorize(m)) throw NewtonFailure("Newton system factorization failed", best, it);
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<int>(n));
    const Eigen::VectorXd dir = linear.solve(rhs);

    const double floor_area = 0.5 * detail::min_positive_area(state.tessellation);
    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> trial(n);
    for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
      bool positive = true;
      for (std::size_t i = 0; i < n && positive; ++i) {
        trial[i] = w[i] + alpha * dir[static_cast<int>(i)];
        positive = trial[i] > 0.0;
      }
      if (!positive) continue;
      Tessellation t = tessellate(sys, trial, opt.geometry);
      bool areas_ok = true;
      for (std::size_t i = 0; i < n && areas_ok; ++i)
        if (state.tessellation.cells[i].area > 0.0 && t.cells[i].area < floor_area) areas_ok = false;
      if (!areas_ok) continue;
      auto g_trial = detail::area_mismatch(sys, t);
      const double gnorm_trial = detail::max_abs(g_trial);
      if (!(gnorm_trial < gnorm)) continue;
      const double dual_trial = detail::dual_value_of(sys, t);
      if (dual_trial < dual - 1e-12 * (1.0 + std::abs(dual))) continue;
      w = trial;
      state.tessellation = std::move(t);
      g = std::move(g_trial);
      gnorm = gnorm_trial;
      dual = dual_trial;
      last_step = alpha;
      accepted = true;
      break;
    }
    if (!accepted) throw NewtonFailure("Newton line search stalled", best, it);
  }
}

/// Primal value sum_i int_{L_i} |x-x_i|^2/(2 eps) + C_i(|L_i|) on a tessellation.
inline double primal_value(const ParticleSystem& sys, const Tessellation& tess) {
  double value = 0.0;
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const Cell& c = tess.cells[i];
    value += c.second_moment / (2.0 * sys.epsilon) + cell_cost(*sys.energy, sys.masses[i], c.area);
  }
  return value;
}

/// sum_i U(m_i/|L_i|) |L_i|, the internal part of the energy.
inline double internal_energy(const ParticleSystem& sys, const Tessellation& tess) {
  double value = 0.0;
  for (std::size_t i = 0; i < tess.size(); ++i)
    value += cell_cost(*sys.energy, sys.masses[i], tess.cells[i].area);
  return value;
}

struct PrimalEnergy {
  double value = 0.0;
  SolverState state;
};

/// F_eps(X), evaluated on the optimal tessellation.
inline PrimalEnergy primal_energy(const ParticleSystem& sys,
                                  const std::optional<std::vector<double>>& warm_start = {},
                                  const SolverOptions& opt = {}) {
  PrimalEnergy out;
  out.state = solve_weights(sys, warm_start, opt);
  out.value = primal_value(sys, out.state.tessellation);
  return out;
}

}  // namespace cellflow
