#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cellflow/errors.hpp"
#include "cellflow/geometry/tessellation.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow::app {

enum class TestCase { barenblatt, cross, custom };

inline const char* to_string(TestCase c) {
  switch (c) {
    case TestCase::barenblatt:
      return "barenblatt";
    case TestCase::cross:
      return "cross";
    case TestCase::custom:
      return "custom";
  }
  return "?";
}

/// A positive parameter given either as a number or as the "paper" rule.
struct ScaledParameter {
  std::optional<double> value;  // empty means "paper"
  std::string text = "paper";
};

/// Flat key = value experiment description. See README for the keys.
struct ExperimentConfig {
  TestCase test_case = TestCase::barenblatt;
  TessellationMode mode = TessellationMode::clipped;
  std::string energy_family = "power";
  double gamma = 2.0;
  ScaledParameter epsilon;
  ScaledParameter tau;
  std::optional<double> t0;     // defaults per case
  std::optional<double> t_end;  // defaults per case
  std::vector<double> snapshot_times;
  std::size_t n = 100;
  int lloyd_iters = 20;
  unsigned long seed = 0;
  std::filesystem::path output;

  // barenblatt
  double barenblatt_c = 1.0 / 3.0;
  double domain_half_width = 2.0;
  std::vector<double> gammas;
  std::vector<std::size_t> ns;

  // cross
  double mass = 0.12;
  double thickness = 0.25;
  Vec2 center{};

  // custom
  std::filesystem::path domain_file;
  std::filesystem::path particles_file;
  std::string potential = "none";  // none | quadratic

  /// Raw text of every key seen, for the manifest.
  std::map<std::string, std::string> raw;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Decimal or scientific number, or a fraction "a/b".
inline double parse_number(const std::string& key, const std::string& text) {
  auto one = [&](const std::string& t) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "': cannot parse number '" + text + "'");
    }
    if (trim(t.substr(used)).size() != 0) throw ConfigError("'" + key + "': trailing text in '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  double v = slash == std::string::npos
                 ? one(trim(text))
                 : one(trim(text.substr(0, slash))) / one(trim(text.substr(slash + 1)));
  if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v < 1.0 || v != std::floor(v)) throw ConfigError("'" + key + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (c.raw.count(key)) throw ConfigError("duplicate key '" + key + "'");
    c.raw[key] = val;

    auto num = [&] { return detail::parse_number(key, val); };
    if (key == "case") {
      if (val == "barenblatt") c.test_case = TestCase::barenblatt;
      else if (val == "cross") c.test_case = TestCase::cross;
      else if (val == "custom") c.test_case = TestCase::custom;
      else throw ConfigError("unknown case '" + val + "'");
    } else if (key == "mode") {
      if (val == "full") c.mode = TessellationMode::full;
      else if (val == "clipped") c.mode = TessellationMode::clipped;
      else throw ConfigError("mode must be full or clipped");
    } else if (key == "energy") {
      c.energy_family = val;
    } else if (key == "gamma") {
      c.gamma = num();
    } else if (key == "epsilon" || key == "tau") {
      ScaledParameter p;
      p.text = val;
      if (val != "paper") p.value = num();
      (key == "epsilon" ? c.epsilon : c.tau) = p;
    } else if (key == "t0") {
      c.t0 = num();
    } else if (key == "T" || key == "t_end") {
      c.t_end = num();
    } else if (key == "snapshots") {
      for (const auto& s : detail::split_list(val)) c.snapshot_times.push_back(detail::parse_number(key, s));
    } else if (key == "N" || key == "n") {
      c.n = detail::parse_count(key, val);
    } else if (key == "lloyd_iters") {
      c.lloyd_iters = static_cast<int>(num());
    } else if (key == "seed") {
      c.seed = static_cast<unsigned long>(num());
    } else if (key == "output") {
      c.output = val;
    } else if (key == "C") {
      c.barenblatt_c = num();
    } else if (key == "domain_half_width") {
      c.domain_half_width = num();
    } else if (key == "gammas") {
      for (const auto& s : detail::split_list(val)) c.gammas.push_back(detail::parse_number(key, s));
    } else if (key == "Ns") {
      for (const auto& s : detail::split_list(val)) c.ns.push_back(detail::parse_count(key, s));
    } else if (key == "M" || key == "mass") {
      c.mass = num();
    } else if (key == "thickness") {
      c.thickness = num();
    } else if (key == "center") {
      const auto parts = detail::split_list(val);
      if (parts.size() != 2) throw ConfigError("center must be 'x, y'");
      c.center = {detail::parse_number(key, parts[0]), detail::parse_number(key, parts[1])};
    } else if (key == "domain_file") {
      c.domain_file = val;
    } else if (key == "particles_file") {
      c.particles_file = val;
    } else if (key == "potential") {
      if (val != "none" && val != "quadratic") throw ConfigError("potential must be none or quadratic");
      c.potential = val;
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

/// Scheme parameters after presets are applied.
struct Resolved {
  double epsilon = 0.0;
  double tau = 0.0;
  double t0 = 0.0;
  double t_end = 0.0;
};

/// "paper" presets: eps = 10/N and tau = 10/N^2 for Barenblatt, eps = 2/300
/// and tau = 1/300 with t in [0, 8] for the cross.
inline Resolved resolve(const ExperimentConfig& c, std::size_t n) {
  Resolved r;
  const double nn = static_cast<double>(n);
  switch (c.test_case) {
    case TestCase::barenblatt:
      r.epsilon = c.epsilon.value.value_or(10.0 / nn);
      r.tau = c.tau.value.value_or(10.0 / (nn * nn));
      r.t0 = c.t0.value_or(1.0 / 16.0);
      r.t_end = c.t_end.value_or(1.0);
      break;
    case TestCase::cross:
      r.epsilon = c.epsilon.value.value_or(2.0 / 300.0);
      r.tau = c.tau.value.value_or(1.0 / 300.0);
      r.t0 = c.t0.value_or(0.0);
      r.t_end = c.t_end.value_or(8.0);
      break;
    case TestCase::custom:
      if (!c.epsilon.value || !c.tau.value)
        throw ConfigError("custom case needs numeric epsilon and tau");
      r.epsilon = *c.epsilon.value;
      r.tau = *c.tau.value;
      r.t0 = c.t0.value_or(0.0);
      r.t_end = c.t_end.value_or(1.0);
      break;
  }
  return r;
}

/// Throws ConfigError for the first invalid setting. Run before any output.
inline void validate(const ExperimentConfig& c) {
  if (c.energy_family != "power") throw ConfigError("unknown energy family '" + c.energy_family + "'");
  auto check_gamma = [](double g) {
    if (!(g > 1.0)) throw ConfigError("gamma must exceed 1");
  };
  check_gamma(c.gamma);
  for (double g : c.gammas) check_gamma(g);
  for (std::size_t k = 1; k < c.ns.size(); ++k)
    if (c.ns[k] <= c.ns[k - 1]) throw ConfigError("Ns must increase");
  if (c.lloyd_iters < 0) throw ConfigError("lloyd_iters must be nonnegative");
  if (c.epsilon.value && !(*c.epsilon.value > 0.0)) throw ConfigError("epsilon must be positive");
  if (c.tau.value && !(*c.tau.value > 0.0)) throw ConfigError("tau must be positive");
  const Resolved r = resolve(c, c.n);
  if (!(r.t_end > r.t0)) throw ConfigError("T must exceed t0");
  if (c.test_case == TestCase::barenblatt) {
    if (!(r.t0 > 0.0)) throw ConfigError("Barenblatt runs need t0 > 0");
    if (!(c.barenblatt_c > 0.0)) throw ConfigError("C must be positive");
    if (!(c.domain_half_width > 0.0)) throw ConfigError("domain_half_width must be positive");
  }
  if (c.test_case == TestCase::cross) {
    if (!(c.mass > 0.0)) throw ConfigError("M must be positive");
    if (!(c.thickness > 0.0 && c.thickness <= 1.0)) throw ConfigError("thickness must lie in (0, 1]");
  }
  if (c.test_case == TestCase::custom) {
    if (c.domain_file.empty() || !std::filesystem::exists(c.domain_file))
      throw ConfigError("domain_file is missing or does not exist");
    if (c.particles_file.empty() || !std::filesystem::exists(c.particles_file))
      throw ConfigError("particles_file is missing or does not exist");
  }
}

}  // namespace cellflow::app
