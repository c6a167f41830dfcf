#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellflow/analysis/barenblatt.hpp"
#include "cellflow/analysis/metrics.hpp"
#include "cellflow/analysis/study.hpp"
#include "cellflow/app/config.hpp"
#include "cellflow/app/cross.hpp"
#include "cellflow/dynamics/dynamics.hpp"
#include "cellflow/energy/energy_model.hpp"
#include "cellflow/energy/potential.hpp"
#include "cellflow/geometry/domain.hpp"

namespace cellflow::app {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kConfigError = 1, kRunFailure = 2 };

struct RunOptions {
  std::filesystem::path out_dir;  // overrides the config's output key when set
  std::optional<unsigned long> seed;
  unsigned workers = 1;
  bool verbose = false;
  std::ostream* log = &std::cerr;
};

/// Reads "x y m" triples, one particle per line.
inline void load_particles(const std::filesystem::path& path, std::vector<Vec2>& x,
                           std::vector<double>& m) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open particle file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Vec2 p;
    double mass = 0.0;
    if (!(ls >> p.x >> p.y >> mass)) throw ConfigError("malformed particle on line " + std::to_string(lineno));
    x.push_back(p);
    m.push_back(mass);
  }
  if (x.empty()) throw ConfigError("particle file holds no particles");
}

namespace detail {

/// Writes CSV rows with round-trip precision.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << std::setprecision(17) << header << '\n';
  }
  template <class... T>
  void row(const T&... v) {
    std::size_t k = 0;
    ((out_ << (k++ ? "," : "") << cell(v)), ...);
    out_ << '\n';
  }
  void flush() { out_.flush(); }

 private:
  template <class T>
  static std::string cell(const T& v) {
    std::ostringstream s;
    s << std::setprecision(17);
    if constexpr (std::is_floating_point_v<T>) {
      if (std::isnan(v)) return "";
    }
    s << v;
    return s.str();
  }
  std::ofstream out_;
};

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json resolved_json(const ExperimentConfig& c, const Resolved& r, std::size_t n,
                          unsigned long seed) {
  json j;
  j["case"] = to_string(c.test_case);
  j["mode"] = to_string(c.mode);
  j["energy"] = {{"family", c.energy_family}, {"gamma", c.gamma}};
  j["epsilon"] = r.epsilon;
  j["epsilon_rule"] = c.epsilon.text;
  j["tau"] = r.tau;
  j["tau_rule"] = c.tau.text;
  const auto [steps, tau_eff] = step_plan(r.t0, r.t_end, r.tau);
  j["tau_effective"] = tau_eff;
  j["steps"] = steps;
  j["t0"] = r.t0;
  j["T"] = r.t_end;
  j["N"] = n;
  j["snapshot_times"] = c.snapshot_times;
  j["seed"] = seed;
  j["lloyd_iters"] = c.lloyd_iters;
  j["domain_half_width"] = c.domain_half_width;
  switch (c.test_case) {
    case TestCase::barenblatt:
      j["C"] = c.barenblatt_c;
      break;
    case TestCase::cross:
      j["M"] = c.mass;
      j["thickness"] = c.thickness;
      j["center"] = {c.center.x, c.center.y};
      j["potential"] = "quadratic";
      break;
    case TestCase::custom:
      j["domain_file"] = c.domain_file.string();
      j["particles_file"] = c.particles_file.string();
      j["potential"] = c.potential;
      j["center"] = {c.center.x, c.center.y};
      break;
  }
  j["solver"] = {{"tolerance", SolverOptions{}.tolerance},
                 {"max_iterations", SolverOptions{}.max_iterations}};
  return j;
}

inline void write_manifest(const std::filesystem::path& dir, const json& j) {
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

inline SolverOptions solver_options(const RunOptions& opt) {
  SolverOptions s;
  if (opt.verbose && opt.log) {
    std::ostream* log = opt.log;
    s.log = [log](const NewtonRecord& r) {
      json j{{"newton", r.iteration}, {"residual", r.residual}, {"area_residual", r.area_residual},
             {"dual", r.dual}, {"step", r.step}, {"min_area", r.min_area}};
      *log << j.dump() << '\n';
    };
  }
  return s;
}

inline std::filesystem::path output_dir(const ExperimentConfig& c, const RunOptions& opt) {
  std::filesystem::path dir = opt.out_dir.empty() ? c.output : opt.out_dir;
  if (dir.empty()) throw ConfigError("no output directory (use --out or the output key)");
  return dir;
}

inline const char* rate_header() {
  return "gamma,N,inv_sqrt_N,epsilon,tau,error,rate,delta_N,steps,seconds,status";
}

}  // namespace detail

/// One trajectory for the configured case. Returns the process exit code.
inline int run_simulation(ExperimentConfig c, const RunOptions& opt, std::ostream& err = std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::path dir;
  try {
    validate(c);
    dir = detail::output_dir(c, opt);
    if (c.test_case == TestCase::custom) {
      // fail on unreadable inputs before any output appears
      (void)load_domain_file(c.domain_file);
      std::vector<Vec2> x;
      std::vector<double> m;
      load_particles(c.particles_file, x, m);
    }
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (opt.seed) c.seed = *opt.seed;

  std::filesystem::create_directories(dir);
  json manifest;
  manifest["command"] = "simulate";
  json outputs = json::array({"snapshots.csv", "energy.csv"});

  detail::CsvWriter snaps(dir / "snapshots.csv", "step,time,id,x,y,mass,area,density");
  detail::CsvWriter energy(dir / "energy.csv", "step,time,energy,internal");
  std::vector<double> masses;
  auto on_energy = [&](std::size_t n, double t, double f, double u) { energy.row(n, t, f, u); };
  auto on_snapshot = [&](const Snapshot& s) {
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      const double a = s.areas[i];
      snaps.row(s.step, s.time, i, s.positions[i].x, s.positions[i].y, masses[i], a,
                a > 0.0 ? masses[i] / a : std::numeric_limits<double>::infinity());
    }
  };

  std::size_t n_actual = c.n;
  Resolved r = resolve(c, c.n);
  json results;
  int code = kOk;
  try {
    if (c.test_case == TestCase::barenblatt) {
      BarenblattRun run;
      run.spec.gamma = c.gamma;
      run.spec.C = c.barenblatt_c;
      run.spec.t0 = r.t0;
      run.n = c.n;
      run.epsilon = r.epsilon;
      run.tau = r.tau;
      run.t_end = r.t_end;
      run.lloyd_iterations = c.lloyd_iters;
      run.domain_half_width = c.domain_half_width;
      run.mode = c.mode;
      run.snapshot_times = c.snapshot_times;
      run.solver = detail::solver_options(opt);
      run.on_energy = on_energy;
      run.on_snapshot = on_snapshot;
      run.initial = build_initial_data(run.spec, run.n, run.lloyd_iterations);
      masses = run.initial->masses;
      const BarenblattResult res = run_barenblatt(run);
      results["flow_error"] = res.error;
      results["delta_N"] = res.initial.delta_n;
      results["h_N"] = res.initial.h_n;
      results["grad_phi_max"] = res.initial.grad_phi_max;
      results["total_mass"] = res.initial.total_mass;
      results["newton_iterations"] = res.trajectory.newton_iterations;
      results["final_energy"] = res.trajectory.energies.back();
      results["final_internal"] = res.trajectory.internal.back();

      detail::CsvWriter rates(dir / "rates.csv", detail::rate_header());
      rates.row(c.gamma, c.n, 1.0 / std::sqrt(static_cast<double>(c.n)), r.epsilon, r.tau, res.error,
                std::numeric_limits<double>::quiet_NaN(), res.initial.delta_n,
                res.trajectory.times.size() - 1, res.seconds, "ok");
      outputs.push_back("rates.csv");
    } else {
      SimulationSetup setup;
      setup.system.energy = std::make_shared<PowerEnergy>(c.gamma);
      setup.system.mode = c.mode;
      if (c.test_case == TestCase::cross) {
        const CrossData data = cross_initializer(c.n, c.mass, c.center, c.thickness);
        setup.system.domain = std::make_shared<const Domain>(Domain::rectangle(
            c.center - Vec2{c.domain_half_width, c.domain_half_width},
            c.center + Vec2{c.domain_half_width, c.domain_half_width}));
        setup.system.positions = data.positions;
        setup.system.masses = data.masses;
        setup.potential = Potential::quadratic(c.center);
        n_actual = data.positions.size();
        results["lattice_spacing"] = data.spacing;
      } else {
        setup.system.domain = std::make_shared<const Domain>(load_domain_file(c.domain_file));
        load_particles(c.particles_file, setup.system.positions, setup.system.masses);
        setup.potential = c.potential == "quadratic" ? Potential::quadratic(c.center) : Potential::none();
        n_actual = setup.system.positions.size();
      }
      masses = setup.system.masses;
      setup.system.epsilon = r.epsilon;
      setup.t0 = r.t0;
      setup.t_end = r.t_end;
      setup.tau = r.tau;
      setup.snapshot_times = c.snapshot_times;
      setup.solver = detail::solver_options(opt);
      setup.on_energy = on_energy;
      setup.on_snapshot = on_snapshot;
      const TrajectoryRecord rec = simulate(setup);
      results["newton_iterations"] = rec.newton_iterations;
      results["final_energy"] = rec.energies.back();
      results["final_internal"] = rec.internal.back();
      if (c.test_case == TestCase::cross && c.gamma == 2.0) {
        const double limit = equilibrium_profile(c.mass, c.center).internal_energy();
        results["equilibrium_internal"] = limit;
        results["relative_deviation"] = std::abs(rec.internal.back() - limit) / limit;
      }
    }
    manifest["status"] = "complete";
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    manifest["status"] = "partial";
    manifest["error"] = e.what();
    code = kRunFailure;
  }
  snaps.flush();
  energy.flush();
  manifest["config"] = detail::resolved_json(c, r, n_actual, c.seed);
  manifest["results"] = results;
  manifest["outputs"] = outputs;
  manifest["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::write_manifest(dir, manifest);
  return code;
}

/// Barenblatt convergence study over gammas x Ns.
inline int run_study(ExperimentConfig c, const RunOptions& opt, std::ostream& err = std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::path dir;
  try {
    if (c.test_case != TestCase::barenblatt) throw ConfigError("study needs case = barenblatt");
    if (c.epsilon.value || c.tau.value)
      throw ConfigError("study runs use the N-dependent rule; set epsilon = paper and tau = paper");
    validate(c);
    dir = detail::output_dir(c, opt);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (opt.seed) c.seed = *opt.seed;
  if (c.gammas.empty()) c.gammas = {c.gamma};
  if (c.ns.empty()) c.ns = {c.n};
  std::filesystem::create_directories(dir);

  const Resolved r = resolve(c, c.ns.front());
  StudyOptions so;
  so.base.C = c.barenblatt_c;
  so.base.t0 = r.t0;
  so.t_end = r.t_end;
  so.lloyd_iterations = c.lloyd_iters;
  so.domain_half_width = c.domain_half_width;
  so.mode = c.mode;
  so.workers = opt.workers;
  so.solver = detail::solver_options(opt);
  if (opt.verbose && opt.log) {
    std::ostream* log = opt.log;
    so.on_row = [log](const StudyRow& row) {
      *log << json{{"gamma", row.gamma}, {"N", row.n}, {"error", detail::number(row.error)},
                   {"seconds", row.seconds}, {"failure", row.failure}}
                  .dump()
           << '\n';
    };
  }

  json manifest;
  manifest["command"] = "study";
  int code = kOk;
  std::vector<StudyRow> rows;
  try {
    rows = convergence_study(c.gammas, c.ns, so);
  } catch (const std::exception& e) {
    err << "study failed: " << e.what() << '\n';
    manifest["error"] = e.what();
    code = kRunFailure;
  }

  detail::CsvWriter rates(dir / "rates.csv", detail::rate_header());
  json levels = json::array();
  bool failures = false;
  for (const auto& row : rows) {
    rates.row(row.gamma, row.n, row.inv_sqrt_n, row.epsilon, row.tau, row.error, row.rate, row.delta_n,
              row.steps, row.seconds, row.failure.empty() ? std::string("ok") : "failed: " + row.failure);
    levels.push_back({{"gamma", row.gamma}, {"N", row.n}, {"epsilon", row.epsilon}, {"tau", row.tau}});
    failures = failures || !row.failure.empty();
  }
  rates.flush();
  if (failures) code = kRunFailure;
  manifest["status"] = code == kOk ? "complete" : "partial";
  json cfg = detail::resolved_json(c, r, c.ns.front(), c.seed);
  cfg["gammas"] = c.gammas;
  cfg["Ns"] = c.ns;
  cfg["levels"] = levels;
  cfg["workers"] = opt.workers;
  manifest["config"] = cfg;
  manifest["outputs"] = json::array({"rates.csv"});
  manifest["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::write_manifest(dir, manifest);
  return code;
}

}  // namespace cellflow::app
