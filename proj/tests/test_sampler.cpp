#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "qps/accumulator.hpp"
#include "qps/sampler.hpp"

using namespace qps;

namespace {

ThermoState ideal_state(double z, double L, int d = 3) {
  ThermoState s;
  s.fugacity = z;
  s.box_edge = L;
  s.dimension = d;
  return s;
}

}  // namespace

TEST(SampleMomenta, GaussianMoments) {
  ThermoState s;
  s.beta = 0.8;
  s.mass = 2.0;
  s.dimension = 1;
  Rng rng(1);
  auto p = sample_momenta(100000, s, rng);
  double m2 = 0, m4 = 0;
  for (double x : p) {
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m2 /= p.size();
  m4 /= p.size();
  const double var = s.mass / s.beta;
  // standard error of the p^2 mean is sqrt(2) var / sqrt(n)
  EXPECT_NEAR(m2, var, 4 * std::sqrt(2.0) * var / std::sqrt(1e5));
  EXPECT_NEAR(m4 / (m2 * m2), 3.0, 0.1);
  EXPECT_TRUE(sample_momenta(0, s, rng).empty());
}

TEST(Metropolis, IdealGasAcceptsEverything) {
  auto s = ideal_state(1.0, 5.0);
  Rng rng(2);
  PhaseConfig c(3);
  for (int i = 0; i < 30; ++i) {
    double q[3] = {1.0 * i / 10, 2.0, 3.0}, p[3] = {0, 0, 0};
    c.add_particle(q, p);
  }
  SamplerConfig cfg;
  cfg.max_displacement = 3.0;
  auto st = metropolis_sweep(c, SystemModel::ideal_gas(), s, cfg, rng);
  EXPECT_EQ(st.accepted, 30);
  EXPECT_EQ(st.attempted, 30);
  for (double x : c.positions()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 5.0);
  }
}

TEST(Metropolis, ZeroDisplacementLeavesConfiguration) {
  auto s = ideal_state(1.0, 5.0);
  PairFunction f;
  auto m = SystemModel::pair_potential(f, 2.5);
  Rng rng(3);
  PhaseConfig c(3);
  for (int i = 0; i < 10; ++i) {
    double q[3] = {0.45 * i, 1.0 + 0.1 * i, 2.0}, p[3] = {0, 0, 0};
    c.add_particle(q, p);
  }
  PhaseConfig before = c;
  SamplerConfig cfg;
  cfg.max_displacement = 0.0;
  metropolis_sweep(c, m, s, cfg, rng);
  EXPECT_EQ(c, before);
}

TEST(Metropolis, HarmonicWellPositionHistogram) {
  ThermoState s;
  s.dimension = 1;
  s.box_edge = 40.0;
  s.beta = 1.3;
  s.mass = 0.8;
  const double omega = 1.1;
  const auto m = SystemModel::harmonic_well(omega);
  const double sigma = 1.0 / std::sqrt(s.beta * s.mass * omega * omega);
  Rng rng(4);
  PhaseConfig c(1);
  double q0[1] = {0.0}, p0[1] = {0.0};
  c.add_particle(q0, p0);
  SamplerConfig cfg;
  cfg.max_displacement = 2.5 * sigma;
  const int bins = 20, n = 40000;
  std::vector<double> hist(bins, 0.0);
  const double lo = -3 * sigma, width = 6 * sigma / bins;
  int inside = 0;
  for (int k = 0; k < n * 10; ++k) {
    metropolis_sweep(c, m, s, cfg, rng);
    if (k % 10) continue;
    const double x = minimum_image(c.positions()[0], s.box_edge);
    const int b = static_cast<int>(std::floor((x - lo) / width));
    if (b >= 0 && b < bins) {
      hist[b] += 1;
      ++inside;
    }
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double a = lo + b * width, e = a + width;
    const double p = 0.5 * (std::erf(e / (sigma * std::sqrt(2.0))) - std::erf(a / (sigma * std::sqrt(2.0))));
    const double expected = p * n;
    chi2 += (hist[b] - expected) * (hist[b] - expected) / expected;
  }
  // 20 degrees of freedom; p ~ 1e-4 threshold
  EXPECT_LT(chi2, 50.0);
  EXPECT_GT(inside, 0.99 * n);
}

TEST(Gcmc, IdealGasIsPoisson) {
  auto s = ideal_state(0.5, 3.0);
  const double mean = s.fugacity * s.volume() / std::pow(thermal_wavelength(s), 3);
  for (double ratio : {0.5, 0.3}) {
    SamplerConfig cfg;
    cfg.sweeps = 40000;
    cfg.equilibration_sweeps = 200;
    cfg.insert_delete_ratio = ratio;
    cfg.seed = 5;
    Accumulator acc(2, 200);
    std::map<std::size_t, double> dist;
    Chain chain(SystemModel::ideal_gas(), s, cfg, 0);
    chain.run([&](const SampleRecord& r) {
      const double n = static_cast<double>(r.config.size());
      const Complex x[2] = {n, n * n};
      acc.add(x);
      dist[r.config.size()] += 1.0;
    });
    auto m = acc.mean(0);
    EXPECT_NEAR(m.real(), mean, 3 * m.error) << ratio;
    auto var = acc.jackknife([](std::span<const Complex> v) { return v[1] - v[0] * v[0]; });
    EXPECT_NEAR(var.real() / mean, 1.0, 3 * var.error / mean + 0.01);
    // distribution shape
    const double total = static_cast<double>(acc.count());
    for (std::size_t k = 0; k < 10; ++k) {
      const double poisson = std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
      EXPECT_NEAR(dist[k] / total, poisson, 0.02) << k;
    }
  }
}

TEST(Gcmc, VanishingFugacityEmptiesTheBox) {
  auto s = ideal_state(1e-9, 3.0);
  Rng rng(6);
  PhaseConfig c(3);
  for (int i = 0; i < 20; ++i) {
    double q[3] = {0.1 * i, 0.5, 0.5}, p[3] = {0, 0, 0};
    c.add_particle(q, p);
  }
  SamplerConfig cfg;
  for (int k = 0; k < 2000; ++k) gcmc_step(c, SystemModel::ideal_gas(), s, cfg, rng);
  EXPECT_EQ(c.size(), 0u);
}

TEST(Chain, IdenticalSeedsGiveIdenticalStreams) {
  auto s = ideal_state(0.3, 4.0);
  PairFunction f;
  f.sigma = 0.5;
  auto m = SystemModel::pair_potential(f, 1.5);
  SamplerConfig cfg;
  cfg.sweeps = 300;
  cfg.equilibration_sweeps = 50;
  cfg.seed = 77;
  auto a = sample_chain(m, s, cfg, 0);
  auto b = sample_chain(m, s, cfg, 0);
  auto c = sample_chain(m, s, cfg, 1);
  ASSERT_EQ(a.size(), 300u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].config, b[i].config);
    EXPECT_EQ(a[i].U, b[i].U);
    differs |= !(a[i].config == c[i].config);
  }
  EXPECT_TRUE(differs);
}

TEST(Chain, CachedEnergiesMatchRecomputation) {
  auto s = ideal_state(0.4, 4.0);
  PairFunction f;
  f.sigma = 0.6;
  auto m = SystemModel::pair_potential(f, 1.8);
  SamplerConfig cfg;
  cfg.sweeps = 100;
  cfg.equilibration_sweeps = 20;
  for (const auto& r : sample_chain(m, s, cfg)) {
    EXPECT_NEAR(r.U, m.potential(r.config, s), 1e-12 * (1 + std::abs(r.U)));
    EXPECT_NEAR(r.K, kinetic_energy(r.config, s), 1e-12 * (1 + r.K));
  }
}

TEST(Chain, DisplacementTuningStaysInBox) {
  auto s = ideal_state(0.3, 4.0);
  SamplerConfig cfg;
  cfg.sweeps = 10;
  cfg.equilibration_sweeps = 200;
  Chain c(SystemModel::ideal_gas(), s, cfg, 0);
  c.run([](const SampleRecord&) {});
  // ideal gas accepts everything, so tuning runs into the L/2 cap
  EXPECT_EQ(c.max_displacement(), 2.0);
}

TEST(Chain, CheckpointResumeIsBitExact) {
  auto s = ideal_state(0.3, 4.0);
  PairFunction f;
  f.sigma = 0.5;
  auto m = SystemModel::pair_potential(f, 1.5);
  SamplerConfig cfg;
  cfg.sweeps = 200;
  cfg.equilibration_sweeps = 40;
  cfg.seed = 9;
  const auto reference = sample_chain(m, s, cfg, 2);

  for (int stop : {25, 130}) {
    Chain first(m, s, cfg, 2);
    std::vector<SampleRecord> got;
    SampleRecord r;
    while (first.sweep() < stop)
      if (first.step(&r)) got.push_back(r);
    std::stringstream blob;
    first.save(blob);
    Chain resumed(m, s, cfg, 0);
    resumed.load(blob);
    EXPECT_EQ(resumed.id(), 2);
    resumed.run([&](const SampleRecord& x) { got.push_back(x); });
    ASSERT_EQ(got.size(), reference.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].config, reference[i].config);
      EXPECT_EQ(got[i].sweep, reference[i].sweep);
    }
  }
  std::stringstream bad("not a checkpoint");
  Chain c(m, s, cfg, 0);
  EXPECT_THROW(c.load(bad), std::runtime_error);
}

TEST(SamplerConfig, ValidationNamesField) {
  SamplerConfig cfg;
  cfg.insert_delete_ratio = 1.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("insert_delete_ratio"), std::string::npos);
  }
  cfg = {};
  cfg.max_displacement = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.sweeps = -3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_NO_THROW(SamplerConfig{}.validate());
}
