#include <gtest/gtest.h>

#include "qps/virial.hpp"
#include "test_oracles.hpp"

using namespace qps;
using qps::testing::random_config;

namespace {

ThermoState unit_lambda(double z, double L, Statistics st, int d = 3) {
  ThermoState s;
  s.beta = 1.0 / (2.0 * std::numbers::pi);
  s.fugacity = z;
  s.box_edge = L;
  s.dimension = d;
  s.statistics = st;
  return s;
}

SamplerConfig quick(long sweeps, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.sweeps = sweeps;
  cfg.equilibration_sweeps = 200;
  cfg.seed = seed;
  return cfg;
}

// exp(-beta H) W at the scaled point (lambda q, p / lambda).
Complex scaled_weight(const PhaseConfig& c, const SystemModel& m, const ThermoState& s, const CommutationSpec& spec,
                      double lambda) {
  PhaseConfig x = c;
  for (double& q : x.positions()) q *= lambda;
  for (double& p : x.momenta()) p /= lambda;
  const double H = kinetic_energy(x, s) + m.potential(x, s);
  return std::exp(-s.beta * H) * w_value(x, m, s, spec);
}

}  // namespace

TEST(VirialFunction, ClassicalIdealGasIsKinetic) {
  auto s = unit_lambda(1.0, 5.0, Statistics::Boltzmann);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    auto c = random_config(rng, 4, 3, 5.0, 3.0);
    auto v = virial_parts(c, SystemModel::ideal_gas(), s, Classical{});
    double p2 = 0;
    for (double p : c.momenta()) p2 += p * p;
    EXPECT_NEAR(v.total().real(), s.beta * p2 / s.mass, 1e-12 * (1 + p2));
    EXPECT_EQ(v.potential, 0.0);
    EXPECT_EQ(v.gradient, Complex{});
  }
}

TEST(VirialFunction, ClassicalPairFluidIsClausius) {
  ThermoState s;
  s.box_edge = 5.0;
  PairFunction f;
  f.sigma = 0.8;
  const double cutoff = 2.0;
  auto m = SystemModel::pair_potential(f, cutoff);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    auto c = random_config(rng, 6, 3, 5.0, 2.0);
    double clausius = 0, p2 = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        double r2 = 0;
        for (int a = 0; a < 3; ++a) {
          const double d = minimum_image(c.position(i)[a] - c.position(j)[a], s.box_edge);
          r2 += d * d;
        }
        const double r = std::sqrt(r2);
        if (r < cutoff) clausius -= r * f.derivatives(r)[1];
      }
    for (double p : c.momenta()) p2 += p * p;
    const double expected = s.beta * (p2 / s.mass + clausius);
    EXPECT_NEAR(virial_phase_function(c, m, s, Classical{}).real(), expected, 1e-10 * (1 + std::abs(expected)));
  }
}

TEST(VirialFunction, WignerKirkwoodMatchesFiniteDifference) {
  std::mt19937_64 rng(3);
  const double h = 1e-5;
  for (int d = 1; d <= 3; ++d) {
    ThermoState s;
    s.dimension = d;
    s.beta = 0.6;
    s.box_edge = 20.0;
    auto m = SystemModel::harmonic_well(1.3);
    for (int k = 0; k < 50; ++k) {
      auto c = random_config(rng, 2, d, 1.0, 1.5);
      for (double& q : c.positions()) q -= 0.5;
      const CommutationSpec spec = WignerKirkwood{2};
      const Complex f0 = scaled_weight(c, m, s, spec, 1.0);
      const Complex fd = (scaled_weight(c, m, s, spec, 1 + h) - scaled_weight(c, m, s, spec, 1 - h)) / (2 * h);
      const Complex v = virial_phase_function(c, m, s, spec);
      EXPECT_NEAR(std::abs(v * f0 - fd), 0.0, 1e-6 * (std::abs(fd) + std::abs(f0))) << d << " " << k;
    }
  }
}

TEST(Pressure, ClassicalIdealGasIsDensity) {
  auto s = unit_lambda(0.5, 4.0, Statistics::Boltzmann);
  auto m = SystemModel::ideal_gas();
  MeasureOptions opt;
  opt.virial = true;
  auto meas = measure_stream(sample_chain(m, s, quick(20000, 4)), m, s, opt);
  auto b = pressure(meas);
  auto n = monomer_average(meas, ChannelLayout::NW);
  EXPECT_NEAR(b.total.real() * s.volume(), n.real(), 3 * b.total.error * s.volume());
  EXPECT_NEAR(b.total.real(), 0.5, 3 * b.total.error);
  EXPECT_EQ(b.potential.real(), 0.0);
  EXPECT_EQ(b.gradient.real(), 0.0);
  EXPECT_TRUE(b.loops.empty());
  EXPECT_NEAR(b.total.real(), b.kinetic.real() + b.potential.real() + b.gradient.real(), 1e-12);
  EXPECT_THROW(pressure(measure_stream(sample_chain(m, s, quick(10, 5)), m, s, MeasureOptions{})),
               std::invalid_argument);
}

TEST(Pressure, PairFluidEqualsTextbookEstimator) {
  ThermoState s;
  s.fugacity = 3.0;
  s.box_edge = 6.0;
  PairFunction f;
  const double cutoff = 2.5;
  auto m = SystemModel::pair_potential(f, cutoff);
  auto samples = sample_chain(m, s, quick(3000, 6));
  MeasureOptions opt;
  opt.virial = true;
  opt.block_size = 50;
  auto b = pressure(measure_stream(samples, m, s, opt));
  // textbook: beta p = (<sum p^2/m> - <sum r u'(r)>) beta / (d V), W = 1
  double sum = 0;
  for (const auto& r : samples) {
    const auto& c = r.config;
    double x = 0;
    for (double p : c.momenta()) x += p * p / s.mass;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        const double rr = std::sqrt(detail::squared_separation(c, i, j, s));
        if (rr < cutoff) x -= rr * f.derivatives(rr)[1];
      }
    sum += s.beta * x;
  }
  const double textbook = sum / samples.size() / (3.0 * s.volume());
  EXPECT_NEAR(b.total.real(), textbook, 1e-12 * std::abs(textbook));
  EXPECT_GT(b.potential.real(), 0.0);  // repulsive
  EXPECT_NEAR(b.total.real(), b.kinetic.real() + b.potential.real() + b.gradient.real(), 1e-12 * textbook);
}

TEST(Pressure, IdealBoseWithLoops) {
  const double z = 0.3;
  auto s = unit_lambda(z, 5.0, Statistics::Bose);
  auto m = SystemModel::ideal_gas();
  MeasureOptions opt;
  opt.virial = true;
  opt.l_max = 3;
  opt.momentum_draws = 8;
  Measurements meas(m, s, opt);
  Chain chain(m, s, quick(8000, 7), 0);
  chain.run([&](const SampleRecord& r) { meas.add(r); });
  auto b = pressure(meas);
  double exact = 0;
  for (int l = 1; l <= 3; ++l) exact += std::pow(z, l) / std::pow(l, 2.5);
  ASSERT_EQ(b.loops.size(), 2u);
  EXPECT_NEAR(b.total.real(), exact, 3 * b.total.error);
  EXPECT_NEAR(b.loops[0].real(), z * z / std::pow(2.0, 2.5), 3 * b.loops[0].error);
  double parts = b.kinetic.real() + b.potential.real() + b.gradient.real();
  for (const auto& l : b.loops) parts += l.real();
  EXPECT_NEAR(b.total.real(), parts, 1e-12 * exact);
}

TEST(ScaledCoordinates, LoopInvarianceAndBoxPressure) {
  ThermoState s;
  s.beta = 0.5;
  s.box_edge = 3.0;
  for (int d = 1; d <= 3; ++d) {
    s.dimension = d;
    auto r = scaled_coordinate_check(s);
    EXPECT_LT(r.dimer_change, 1e-7);
    EXPECT_LT(r.trimer_change, 1e-7);
    EXPECT_NEAR(r.box_pressure, r.box_exact, 1e-5 * std::abs(r.box_exact));
    EXPECT_TRUE(r.pass);
  }
}
