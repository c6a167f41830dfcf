#pragma once

#include <stdexcept>
#include <string>

namespace cellflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDomain : public Error {
 public:
  using Error::Error;
};

class CoincidentParticles : public Error {
 public:
  CoincidentParticles(std::size_t i, std::size_t j)
      : Error("particles " + std::to_string(i) + " and " + std::to_string(j) +
              " coincide"),
        first(i),
        second(j) {}
  std::size_t first;
  std::size_t second;
};

class NonpositiveWeight : public Error {
 public:
  using Error::Error;
};

class NegativeDensity : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain where a function is finite or differentiable.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NewtonFailure : public Error {
 public:
  NewtonFailure(const std::string& what, double best, int iters)
      : Error(what), best_residual(best), iterations(iters) {}
  double best_residual;
  int iterations;
};

class StaleState : public Error {
 public:
  using Error::Error;
};

class UnsupportedPotential : public Error {
 public:
  using Error::Error;
};

class DissipationViolation : public Error {
 public:
  DissipationViolation(const std::string& what, std::size_t at_step,
                       double before, double after)
      : Error(what), step(at_step), energy_before(before), energy_after(after) {}
  std::size_t step;
  double energy_before;
  double energy_after;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class NonpositiveDensity : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cellflow
