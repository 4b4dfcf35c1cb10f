#include <gtest/gtest.h>

#include "qps/estimators.hpp"
#include "qps/oracle.hpp"
#include "test_oracles.hpp"

using namespace qps;
using qps::testing::random_config;

namespace {

// Lambda = 1 at beta = 1 / (2 pi) with m = hbar = 1.
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
  cfg.equilibration_sweeps = 100;
  cfg.seed = seed;
  return cfg;
}

Measurements run(const SystemModel& m, const ThermoState& s, const SamplerConfig& cfg, const MeasureOptions& opt) {
  Measurements meas(m, s, opt);
  Chain chain(m, s, cfg, 0);
  chain.run([&](const SampleRecord& r) { meas.add(r); });
  return meas;
}

std::vector<Complex> random_row(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> g;
  std::vector<Complex> x(k);
  for (auto& v : x) v = {g(rng), g(rng)};
  return x;
}

}  // namespace

TEST(Accumulator, MergeMatchesConcatenationAndIsAssociative) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> blocks(0, 4), len(0, 40);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t bs = 1 + trial % 7;
    Accumulator a(3, bs), b(3, bs), c(3, bs), whole(3, bs);
    // block-aligned parts concatenate exactly
    for (auto* part : {&a, &b, &c}) {
      const int n = blocks(rng) * static_cast<int>(bs);
      for (int i = 0; i < n; ++i) {
        auto x = random_row(rng, 3);
        part->add(x);
        whole.add(x);
      }
    }
    Accumulator left = a, right = b;
    left.merge(b);
    left.merge(c);
    right.merge(c);
    Accumulator assoc = a;
    assoc.merge(right);
    ASSERT_EQ(left.count(), whole.count());
    ASSERT_EQ(left.totals(), whole.totals());
    ASSERT_EQ(assoc.totals(), left.totals());
    ASSERT_EQ(assoc.blocks(), left.blocks());
    // arbitrary lengths: equal up to summation order
    Accumulator p(2, bs), q(2, bs), pq(2, bs);
    const int np = len(rng), nq = len(rng);
    for (int i = 0; i < np + nq; ++i) {
      auto x = random_row(rng, 2);
      (i < np ? p : q).add(x);
      pq.add(x);
    }
    Accumulator qp = q;
    qp.merge(p);
    p.merge(q);
    ASSERT_EQ(p.count(), pq.count());
    for (std::size_t k = 0; k < 2; ++k) {
      ASSERT_NEAR(std::abs(p.totals()[k] - pq.totals()[k]), 0.0, 1e-12 * (1 + np + nq));
      ASSERT_NEAR(std::abs(qp.totals()[k] - pq.totals()[k]), 0.0, 1e-12 * (1 + np + nq));
    }
  }
}

TEST(Accumulator, JackknifeErrorOfIidMean) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 2.0);
  Accumulator acc(1, 50);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Complex x[1] = {g(rng)};
    acc.add(x);
  }
  auto e = acc.mean(0);
  EXPECT_NEAR(e.error, 2.0 / std::sqrt(n), 0.15 * 2.0 / std::sqrt(n));
  EXPECT_EQ(e.n_samples, n);
  EXPECT_THROW(Accumulator(1, 10).mean(0), std::invalid_argument);
}

TEST(Cdiv, ConjugationSymmetricBitForBit) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    auto v = random_row(rng, 2);
    const Complex r = cdiv(v[0], v[1]), rc = cdiv(std::conj(v[0]), std::conj(v[1]));
    ASSERT_EQ(r.real(), rc.real());
    ASSERT_EQ(r.imag(), -rc.imag());
    ASSERT_NEAR(std::abs(r - v[0] / v[1]), 0.0, 1e-12 * std::abs(r));
  }
}

TEST(MonomerAverage, TrivialAndEquipartition) {
  auto s = unit_lambda(0.4, 3.0, Statistics::Boltzmann);
  auto m = SystemModel::ideal_gas();
  auto stream = sample_chain(m, s, quick(20000, 4));
  auto one = monomer_average([](const SampleRecord&) { return 1.0; }, stream, m, s, Classical{});
  EXPECT_EQ(one.value, Complex(1.0, 0.0));
  auto px = monomer_average(
      [](const SampleRecord& r) {
        double sum = 0;
        for (std::size_t i = 0; i < r.config.size(); ++i) sum += r.config.momentum(i)[0];
        return sum;
      },
      stream, m, s, Classical{});
  EXPECT_NEAR(px.real(), 0.0, 3 * px.error);
  auto meas = measure_stream(stream, m, s, MeasureOptions{});
  auto K = monomer_average(meas, ChannelLayout::KW);
  auto N = monomer_average(meas, ChannelLayout::NW);
  EXPECT_NEAR(K.real(), 1.5 * N.real() / s.beta, 3 * std::hypot(K.error, 1.5 * N.error / s.beta));
  EXPECT_NEAR(N.real(), poisson_ideal_gas(s).mean_n, 3 * N.error);
  EXPECT_THROW(measure_stream({}, m, s, MeasureOptions{}).count() == 0 ? throw std::invalid_argument("")
                                                                       : void(),
               std::invalid_argument);
  Measurements empty(m, s, MeasureOptions{});
  EXPECT_THROW(monomer_average(empty, ChannelLayout::KW), std::invalid_argument);
}

TEST(LoopGrandPotential, IdealQuantumGas) {
  const double z = 0.3, L = 5.0;
  auto m = SystemModel::ideal_gas();
  MeasureOptions opt;
  opt.l_max = 3;
  opt.momentum_draws = 16;
  double bose2 = 0;
  for (auto st : {Statistics::Bose, Statistics::Fermi}) {
    auto s = unit_lambda(z, L, st);
    auto meas = run(m, s, quick(7000, 5), opt);
    for (std::size_t l = 2; l <= 3; ++l) {
      auto e = loop_grand_potential(meas, l);
      const double exact = ideal_gas_loop_term(static_cast<int>(l), s);
      EXPECT_NEAR(e.real(), exact, 3 * e.error) << to_string(st) << " l=" << l;
      EXPECT_LT(e.error, 0.12 * std::abs(exact));
      EXPECT_TRUE(e.imag_consistent());
    }
    if (st == Statistics::Bose) bose2 = loop_grand_potential(meas, 2).real();
    else EXPECT_LT(loop_grand_potential(meas, 2).real() * bose2, 0.0);
  }
}

TEST(GrandPotentialTotal, IdealGasSeries) {
  auto m = SystemModel::ideal_gas();
  auto s = unit_lambda(0.2, 4.0, Statistics::Boltzmann);
  auto meas = run(m, s, quick(2000, 6), MeasureOptions{});
  auto g = grand_potential_total(meas);
  EXPECT_TRUE(g.monomer_known);
  EXPECT_DOUBLE_EQ(g.total.real(), 0.2 * 64.0);
  auto bs = s.with_statistics(Statistics::Bose);
  MeasureOptions opt;
  opt.l_max = 3;
  opt.momentum_draws = 8;
  auto mb = run(m, bs, quick(6000, 7), opt);
  auto gb = grand_potential_total(mb);
  double exact = 0;
  for (int l = 1; l <= 3; ++l) exact += ideal_gas_loop_term(l, bs);
  EXPECT_NEAR(gb.total.real(), exact, 3 * gb.total.error);
  auto pair = SystemModel::pair_potential(PairFunction{}, 2.0);
  Measurements mp(pair, s, MeasureOptions{});
  PhaseConfig c(3);
  mp.add(c);
  EXPECT_FALSE(grand_potential_total(mp).monomer_known);
}

TEST(Energy, MonomerKernelsAndEquipartition) {
  auto s = unit_lambda(0.4, 3.0, Statistics::Boltzmann);
  auto meas = run(SystemModel::ideal_gas(), s, quick(20000, 8), MeasureOptions{});
  auto e = energy_monomer(meas);
  EXPECT_EQ(e.with_w.value, e.with_wh.value);
  EXPECT_EQ(e.with_w.error, e.with_wh.error);
  const double exact = poisson_ideal_gas(s).energy;
  EXPECT_NEAR(e.with_w.real(), exact, 3 * e.with_w.error);
}

TEST(Energy, HarmonicWellMonomerWithExactW) {
  // noninteracting oscillators: ln Xi_1 = z Z_1, E_1 = -z dZ_1/dbeta
  ThermoState s;
  s.dimension = 1;
  s.beta = 0.7;
  s.fugacity = 1.5;
  s.box_edge = 20.0;
  auto m = SystemModel::harmonic_well(1.0);
  MeasureOptions opt;
  opt.spec = EigenSeries{};
  auto meas = run(m, s, quick(100000, 9), opt);
  auto e = energy_monomer(meas);
  const double exact = s.fugacity * ho_z1_energy_moment(s.beta, 1.0);
  EXPECT_NEAR(e.with_w.real(), exact, 3 * e.with_w.error);
  EXPECT_NEAR(e.with_wh.real(), exact, 3 * e.with_wh.error);
  EXPECT_TRUE(e.with_w.imag_consistent());
  auto v = vanishing_statistic(meas);
  EXPECT_NEAR(v.real(), 0.0, 3 * v.error);
  auto g = grand_potential_total(meas);
  EXPECT_DOUBLE_EQ(g.total.real(), s.fugacity * ho_z1(s.beta, 1.0));
}

TEST(Energy, LoopEnergyIdealBose) {
  auto m = SystemModel::ideal_gas();
  auto s = unit_lambda(0.3, 5.0, Statistics::Bose);
  MeasureOptions opt;
  opt.l_max = 2;
  opt.momentum_draws = 8;
  auto meas = run(m, s, quick(15000, 10), opt);
  auto fl = energy_loop(meas, 2, Kernel::W, EnergyForm::Fluctuation);
  auto di = energy_loop(meas, 2, Kernel::W, EnergyForm::Direct);
  const double exact = ideal_gas_loop_energy(2, s);
  EXPECT_NEAR(fl.real(), exact, 3 * fl.error);
  EXPECT_NEAR(fl.real(), di.real(), 1e-10 * std::abs(exact));
  auto boltz = run(m, s.with_statistics(Statistics::Boltzmann), quick(500, 11), opt);
  EXPECT_EQ(energy_loop(boltz, 2).value, Complex{});
  EXPECT_THROW(energy_loop(meas, 3), std::out_of_range);
}

TEST(Energy, EightRoutesClassicalIdealGasCollapse) {
  auto s = unit_lambda(0.4, 3.0, Statistics::Boltzmann);
  auto meas = run(SystemModel::ideal_gas(), s, quick(3000, 12), MeasureOptions{});
  auto r = energy_eight_routes(meas);
  for (const auto& e : r.routes) EXPECT_EQ(e.value, r.routes[0].value);
}

TEST(Energy, EightRoutesIdealBoseAgree) {
  auto s = unit_lambda(0.3, 5.0, Statistics::Bose);
  MeasureOptions opt;
  opt.l_max = 3;
  opt.momentum_draws = 8;
  auto meas = run(SystemModel::ideal_gas(), s, quick(8000, 13), opt);
  auto r = energy_eight_routes(meas);
  double exact = 0;
  for (int l = 1; l <= 3; ++l) exact += ideal_gas_loop_energy(l, s);
  for (const auto& e : r.routes) {
    EXPECT_NEAR(e.real(), r.routes[0].real(), 1e-10 * std::abs(exact));
    EXPECT_NEAR(e.real(), exact, 3 * e.error);
  }
}

TEST(Energy, ConjugatePairingIsBitExact) {
  // complex W: Wigner-Kirkwood oscillators in a 1D box, with exchange
  ThermoState s;
  s.dimension = 1;
  s.beta = 0.5;
  s.fugacity = 2.0;
  s.box_edge = 12.0;
  s.statistics = Statistics::Fermi;
  MeasureOptions opt;
  opt.spec = WignerKirkwood{2};
  opt.l_max = 3;
  auto meas = run(SystemModel::harmonic_well(1.0), s, quick(5000, 14), opt);
  auto r = energy_eight_routes(meas);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(r.routes[k].real(), r.routes[k + 4].real());
    EXPECT_EQ(r.routes[k].imag(), -r.routes[k + 4].imag());
    EXPECT_EQ(r.routes[k].error, r.routes[k + 4].error);
    EXPECT_TRUE(r.routes[k].imag_consistent()) << k;
  }
}

TEST(Realness, MomentumReflectedPairsGiveExactlyRealEstimates) {
  std::mt19937_64 rng(15);
  int checked = 0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    ThermoState s;
    s.dimension = 1 + trial % 3;
    s.beta = 0.4 + 0.1 * (trial % 4);
    s.box_edge = 6.0;
    s.statistics = trial % 2 ? Statistics::Bose : Statistics::Fermi;
    MeasureOptions opt;
    opt.spec = WignerKirkwood{2};
    opt.l_max = 3;
    opt.virial = true;
    opt.block_size = 1;
    const auto m = trial % 5 ? SystemModel::harmonic_well(0.8) : SystemModel::ideal_gas();
    Measurements meas(m, s, opt);
    for (int k = 0; k < 4; ++k) {
      auto c = random_config(rng, 3, s.dimension, 2.0, 2.0);
      for (double& q : c.positions()) q = wrap_coordinate(q, s.box_edge);
      PhaseConfig r = c;
      for (double& p : r.momenta()) p = -p;
      meas.add(c);
      meas.add(r);
    }
    auto x = measure_sample(PhaseConfig(s.dimension), m, s, opt);
    ASSERT_EQ(x[ChannelLayout::W], Complex(1.0, 0.0));
    try {
      for (std::size_t l = 2; l <= 3; ++l) ASSERT_EQ(loop_grand_potential(meas, l).imag(), 0.0);
      ASSERT_EQ(energy_total(meas).imag(), 0.0);
      ASSERT_EQ(energy_monomer(meas).with_wh.imag(), 0.0);
      ++checked;
    } catch (const NumericalError&) {
      // eight random points can leave sum W statistically indistinguishable from zero
    }
  }
  EXPECT_GT(checked, 0.9 * trials);
}

TEST(HeatCapacity, IdealGasGrandFluctuation) {
  auto m = SystemModel::ideal_gas();
  auto s = unit_lambda(0.4, 3.0, Statistics::Boltzmann);
  auto meas = run(m, s, quick(60000, 16), MeasureOptions{});
  auto cv = heat_capacity(meas);
  const double exact = ideal_gas_loop_heat_capacity(1, s);
  EXPECT_NEAR(cv.real(), exact, 3 * cv.error);
  EXPECT_LT(cv.error, 0.05 * exact);
}

TEST(HeatCapacity, IdealBoseWithLoopsAndFiniteDifference) {
  auto m = SystemModel::ideal_gas();
  auto s = unit_lambda(0.3, 5.0, Statistics::Bose);
  MeasureOptions opt;
  opt.l_max = 2;
  opt.momentum_draws = 4;
  auto meas = run(m, s, quick(25000, 17), opt);
  auto cv = heat_capacity(meas);
  const double exact = ideal_gas_loop_heat_capacity(1, s) + ideal_gas_loop_heat_capacity(2, s);
  EXPECT_NEAR(cv.real(), exact, 3 * cv.error);
  // centred difference of total energy over beta +- 0.01 beta reruns
  const double db = 0.01 * s.beta;
  auto up = run(m, s.with_beta(s.beta + db), quick(25000, 18), opt);
  auto dn = run(m, s.with_beta(s.beta - db), quick(25000, 19), opt);
  auto eu = energy_total(up), ed = energy_total(dn);
  const double fd = -s.beta * s.beta * (eu.real() - ed.real()) / (2 * db);
  const double fd_err = s.beta * s.beta * std::hypot(eu.error, ed.error) / (2 * db);
  EXPECT_NEAR(fd, cv.real(), 3 * std::hypot(fd_err, cv.error));
}

TEST(HeatCapacity, ClassicalSpecHasNoDerivativeTerms) {
  auto s = unit_lambda(0.4, 3.0, Statistics::Boltzmann);
  auto meas = run(SystemModel::ideal_gas(), s, quick(500, 20), MeasureOptions{});
  auto t = meas.accumulator().totals();
  EXPECT_EQ(t[ChannelLayout::DW], Complex{});
  EXPECT_EQ(t[ChannelLayout::HW], t[ChannelLayout::HWH]);
}
