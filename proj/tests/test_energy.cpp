#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cellflow/energy/energy_model.hpp"
#include "cellflow/energy/potential.hpp"

using namespace cellflow;

namespace {

// U(r) = r^2 + r^3: no closed-form inverse pressure, so the generic paths run.
class CubicEnergy final : public EnergyModel {
 public:
  double u(double r) const override { return r * r + r * r * r; }
  double u_prime(double r) const override { return 2 * r + 3 * r * r; }
  double u_second(double r) const override { return 2 + 6 * r; }
  std::string name() const override { return "cubic"; }
};

}  // namespace

TEST(Pressure, PowerFamilyValues) {
  EXPECT_NEAR(PowerEnergy(2.0).pressure(3.0), 9.0, 1e-14);
  EXPECT_EQ(PowerEnergy(2.0).pressure(0.0), 0.0);
  EXPECT_NEAR(PowerEnergy(1.5).pressure(4.0), 8.0, 1e-14);
  EXPECT_THROW(PowerEnergy(2.0).pressure(-1.0), NegativeDensity);
  EXPECT_THROW(PowerEnergy(1.0), DomainError);
}

TEST(Pressure, GenericDefinitionMatchesClosedForm) {
  const CubicEnergy c;
  for (double r : {0.0, 0.1, 1.0, 7.5}) EXPECT_NEAR(c.pressure(r), r * r + 2 * r * r * r, 1e-12 * (1 + r * r * r));
  EXPECT_THROW(c.pressure(-0.5), NegativeDensity);
}

TEST(Pressure, DerivativeIsRTimesUSecond) {
  const CubicEnergy cubic;
  for (double g : {1.5, 2.0, 4.0}) {
    const PowerEnergy m(g);
    for (double r = 1e-3; r <= 10.0; r *= 1.7) {
      const double h = 1e-5 * r;
      const double fd = (m.pressure(r + h) - m.pressure(r - h)) / (2 * h);
      EXPECT_NEAR(fd, r * m.u_second(r), 1e-8 * r * m.u_second(r)) << g << " " << r;
      EXPECT_NEAR(m.pressure_derivative(r), r * m.u_second(r), 1e-13 * r * m.u_second(r));
    }
  }
  for (double r = 1e-3; r <= 10.0; r *= 1.7) {
    const double h = 1e-5 * r;
    const double fd = (cubic.pressure(r + h) - cubic.pressure(r - h)) / (2 * h);
    EXPECT_NEAR(fd, r * cubic.u_second(r), 1e-8 * r * cubic.u_second(r));
  }
}

TEST(Pressure, StrictlyIncreasingAndInvertible) {
  const CubicEnergy cubic;
  double prev = -1;
  for (double r = 0.0; r < 20.0; r += 0.37) {
    const double p = cubic.pressure(r);
    EXPECT_GT(p, prev);
    prev = p;
    if (r > 0) EXPECT_NEAR(cubic.pressure_inverse(p), r, 1e-12 * r);
  }
  EXPECT_NEAR(cubic.pressure(cubic.pressure_inverse(1e-20)), 1e-20, 1e-12 * 1e-20);
  EXPECT_THROW(cubic.pressure_inverse(-1.0), DomainError);
}

TEST(EnergyModel, ConvexAndSuperlinear) {
  const CubicEnergy cubic;
  for (double g : {1.5, 2.0, 4.0}) {
    const PowerEnergy m(g);
    EXPECT_EQ(m.u(0.0), 0.0);
    double prev_ratio = 0.0;
    for (double r = 0.01; r < 50; r *= 1.3) {
      EXPECT_GT(m.u_second(r), 0.0);
      EXPECT_GT(m.u(r) / r, prev_ratio);
      prev_ratio = m.u(r) / r;
    }
    ASSERT_TRUE(m.growth.has_value());
    EXPECT_EQ(m.growth->alpha, g);
  }
  EXPECT_FALSE(cubic.growth.has_value());
}

TEST(ConjugateDerivative, Examples) {
  EXPECT_NEAR(cstar_prime(PowerEnergy(2.0), 1.0, -4.0), 0.5, 1e-15);
  EXPECT_NEAR(cstar_prime(PowerEnergy(2.0), 2.0, -1.0), 2.0, 1e-15);
  EXPECT_NEAR(cstar_prime(PowerEnergy(4.0), 1.0, -16.0), 0.5, 1e-15);
  EXPECT_THROW(cstar_prime(PowerEnergy(2.0), 1.0, 0.0), DomainError);
  EXPECT_THROW(cstar_prime(PowerEnergy(2.0), 1.0, 0.3), DomainError);
}

TEST(ConjugateDerivative, IncreasingInS) {
  const CubicEnergy cubic;
  for (double g : {1.5, 2.0, 4.0}) {
    double prev = 0.0;
    for (double s = -50.0; s < -1e-8; s *= 0.8) {
      const double v = cstar_prime(PowerEnergy(g), 0.7, s);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
  double prev = 0.0;
  for (double s = -50.0; s < -1e-6; s *= 0.8) {
    const double v = cstar_prime(cubic, 0.7, s);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(ConjugateDerivative, ConsistentWithConjugateAndSecondDerivative) {
  const CubicEnergy cubic;
  const PowerEnergy quad(2.0), quart(4.0);
  for (const EnergyModel* m : {static_cast<const EnergyModel*>(&quad), static_cast<const EnergyModel*>(&quart),
                               static_cast<const EnergyModel*>(&cubic)}) {
    for (double s : {-0.3, -1.0, -4.0}) {
      const double h = 1e-6 * std::abs(s);
      const double fd1 = (cstar(*m, 0.8, s + h) - cstar(*m, 0.8, s - h)) / (2 * h);
      EXPECT_NEAR(fd1, cstar_prime(*m, 0.8, s), 1e-7 * cstar_prime(*m, 0.8, s));
      const double fd2 = (cstar_prime(*m, 0.8, s + h) - cstar_prime(*m, 0.8, s - h)) / (2 * h);
      EXPECT_NEAR(fd2, cstar_second(*m, 0.8, s), 1e-6 * cstar_second(*m, 0.8, s));
    }
  }
  EXPECT_EQ(cstar(quad, 1.0, 0.1), std::numeric_limits<double>::infinity());
}

TEST(CellCost, ValuesAndConvexity) {
  const PowerEnergy m(2.0);
  EXPECT_NEAR(cell_cost(m, 1.0, 0.5), 2.0, 1e-15);
  EXPECT_EQ(cell_cost(m, 1.0, 0.0), std::numeric_limits<double>::infinity());
  EXPECT_EQ(cell_cost(m, 1.0, -2.0), std::numeric_limits<double>::infinity());
  EXPECT_LE(cell_cost(m, 1.0, 1.0), 0.5 * (cell_cost(m, 1.0, 0.5) + cell_cost(m, 1.0, 1.5)));
  for (double g : {1.5, 2.0, 4.0}) {
    const PowerEnergy e(g);
    for (double a = 0.05; a < 5; a *= 1.2) {
      const double h = 0.01 * a;
      EXPECT_LT(cell_cost(e, 1.3, a + h), cell_cost(e, 1.3, a));
      EXPECT_LT(cell_cost(e, 1.3, a), 0.5 * (cell_cost(e, 1.3, a - h) + cell_cost(e, 1.3, a + h)));
    }
  }
}

TEST(RelativeKernels, Examples) {
  EXPECT_EQ(relative_entropy_kernel(PowerEnergy(2.0), 7.0, 7.0), 0.0);
  EXPECT_NEAR(relative_entropy_kernel(PowerEnergy(2.0), 3.0, 1.0), 4.0, 1e-14);
  // U(2) - U(1) - U'(1) = 16/3 - 1/3 - 4/3
  EXPECT_NEAR(relative_entropy_kernel(PowerEnergy(4.0), 2.0, 1.0), 11.0 / 3.0, 1e-12);
  EXPECT_EQ(relative_pressure_kernel(PowerEnergy(1.5), 2.5, 2.5), 0.0);
  EXPECT_NEAR(relative_pressure_kernel(PowerEnergy(2.0), 3.0, 1.0), 4.0, 1e-14);
  EXPECT_THROW(relative_entropy_kernel(PowerEnergy(2.0), 1.0, 0.0), DomainError);
  EXPECT_THROW(relative_pressure_kernel(PowerEnergy(2.0), 1.0, -1.0), DomainError);
  EXPECT_THROW(relative_entropy_kernel(PowerEnergy(2.0), -1.0, 1.0), NegativeDensity);
}

TEST(RelativeKernels, RandomizedBoundAndPositivity) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4.0, 2.0);
  for (double g : {1.5, 2.0, 4.0}) {
    const PowerEnergy m(g);
    ASSERT_TRUE(m.pressure_bound_constant().has_value());
    const double a = *m.pressure_bound_constant();
    EXPECT_DOUBLE_EQ(a, g - 1.0);
    for (int k = 0; k < 20000; ++k) {
      const double r = k % 50 == 0 ? 0.0 : std::pow(10.0, u(rng));
      const double s = std::pow(10.0, u(rng));
      const double ue = relative_entropy_kernel(m, r, s);
      const double pe = relative_pressure_kernel(m, r, s);
      EXPECT_GE(ue, 0.0);
      EXPECT_LE(std::abs(pe), a * ue * (1 + 1e-9) + 1e-12 * (m.pressure(r) + m.pressure(s)))
          << g << " " << r << " " << s;
      if (r != s && std::abs(r - s) > 1e-3 * s) EXPECT_GT(ue, 0.0);
    }
  }
}

TEST(Potential, KindsValuesGradients) {
  const Potential none = Potential::none();
  EXPECT_EQ(none.value({3, 4}), 0.0);
  const Potential q = Potential::quadratic({1, -1});
  EXPECT_EQ(q.kind(), Potential::Kind::quadratic);
  EXPECT_NEAR(q.value({4, 3}), 12.5, 1e-15);
  const Vec2 g = q.gradient({4, 3});
  EXPECT_EQ(g.x, 3.0);
  EXPECT_EQ(g.y, 4.0);
  const Potential c = Potential::custom([](Vec2 x) { return x.x * x.y; }, [](Vec2 x) { return Vec2{x.y, x.x}; });
  EXPECT_EQ(c.kind(), Potential::Kind::custom);
  EXPECT_EQ(c.value({2, 5}), 10.0);
  EXPECT_EQ(c.gradient({2, 5}).x, 5.0);
}

TEST(EnergySelection, ByName) {
  EXPECT_EQ(make_energy("power", 3.0)->name(), "power");
  EXPECT_THROW(make_energy("entropy", 1.0), ConfigError);
}
