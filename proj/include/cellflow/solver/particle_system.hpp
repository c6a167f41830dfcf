#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cellflow/energy/energy_model.hpp"
#include "cellflow/errors.hpp"
#include "cellflow/geometry/domain.hpp"
#include "cellflow/geometry/tessellation.hpp"
#include "cellflow/geometry/vec2.hpp"

namespace cellflow {

/// Particles with reference masses m_i^0 and regularization epsilon, living in
/// a domain with a chosen tessellation mode and internal energy.
struct ParticleSystem {
  std::shared_ptr<const Domain> domain;
  std::shared_ptr<const EnergyModel> energy;
  std::vector<Vec2> positions;
  std::vector<double> masses;
  double epsilon = 1.0;
  TessellationMode mode = TessellationMode::full;

  std::size_t size() const { return positions.size(); }

  void validate() const {
    if (!domain) throw ConfigError("particle system has no domain");
    if (!energy) throw ConfigError("particle system has no energy model");
    if (positions.size() != masses.size())
      throw LengthMismatch("positions and masses differ in length");
    if (positions.empty()) throw ConfigError("particle system is empty");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    for (std::size_t i = 0; i < masses.size(); ++i)
      if (!(masses[i] > 0.0))
        throw ConfigError("mass " + std::to_string(i) + " is not positive");
  }

  ParticleSystem with_positions(std::vector<Vec2> x) const {
    ParticleSystem s = *this;
    s.positions = std::move(x);
    return s;
  }

  double total_mass() const {
    double m = 0.0;
    for (double v : masses) m += v;
    return m;
  }
};

}  // namespace cellflow
