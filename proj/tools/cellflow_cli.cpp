#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cellflow/app/config.hpp"
#include "cellflow/app/runner.hpp"

using namespace cellflow::app;

namespace {

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  unsigned workers = 1;
  bool verbose = false;

  RunOptions options() const {
    RunOptions o;
    o.out_dir = out;
    if (seed >= 0) o.seed = static_cast<unsigned long>(seed);
    o.workers = workers;
    o.verbose = verbose;
    return o;
  }
};

void add_flags(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", c.config, "experiment config (key = value lines)");
  if (config_required) opt->required();
  cmd->add_option("-o,--out", c.out, "output directory (overrides the output key)");
  cmd->add_option("--seed", c.seed, "random seed recorded in the manifest");
  cmd->add_option("-j,--workers", c.workers, "worker threads for studies")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", c.verbose, "Newton diagnostics as JSON lines on stderr");
}

int load(const std::string& path, ExperimentConfig& cfg) {
  try {
    cfg = load_config(path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle gradient flows on optimal Laguerre tessellations"};
  app.require_subcommand(1);
  Common sim, study, cross;
  auto* sim_cmd = app.add_subcommand("simulate", "run one trajectory");
  add_flags(sim_cmd, sim, true);
  auto* study_cmd = app.add_subcommand("study", "Barenblatt convergence study over gammas and Ns");
  add_flags(study_cmd, study, true);
  auto* cross_cmd = app.add_subcommand("cross", "cross-shaped data relaxing in a quadratic potential");
  add_flags(cross_cmd, cross, false);
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  if (*sim_cmd) {
    if (int rc = load(sim.config, cfg)) return rc;
    return run_simulation(cfg, sim.options());
  }
  if (*study_cmd) {
    if (int rc = load(study.config, cfg)) return rc;
    return run_study(cfg, study.options());
  }
  if (!cross.config.empty())
    if (int rc = load(cross.config, cfg)) return rc;
  if (cfg.raw.count("case") && cfg.test_case != TestCase::cross) {
    std::cerr << "config error: the cross command needs case = cross\n";
    return kConfigError;
  }
  cfg.test_case = TestCase::cross;
  if (!cfg.raw.count("N") && !cfg.raw.count("n")) cfg.n = 2000;
  return run_simulation(cfg, cross.options());
}
