#include <gtest/gtest.h>

#include "qps/commutation.hpp"
#include "test_oracles.hpp"

using namespace qps;
using qps::testing::ho_commutation;
using qps::testing::random_config;

namespace {

ThermoState ho_state(double beta, int d = 1) {
  ThermoState s;
  s.beta = beta;
  s.dimension = d;
  s.boundary = Boundary::Open;
  return s;
}

PhaseConfig point(double q, double p) {
  PhaseConfig c(1);
  double qq[1] = {q}, pp[1] = {p};
  c.add_particle(qq, pp);
  return c;
}

SystemModel gaussian_fluid() {
  PairFunction f;
  f.kind = PairFunction::Kind::GaussianCore;
  f.epsilon = 0.8;
  f.sigma = 0.9;
  return SystemModel::pair_potential(f, 50.0);
}

const CommutationSpec kSpecs[] = {Classical{}, WignerKirkwood{1}, WignerKirkwood{2}, EigenSeries{}};

}  // namespace

TEST(Commutation, ClassicalIsUnity) {
  std::mt19937_64 rng(1);
  auto c = random_config(rng, 3, 1, 2.0, 2.0);
  auto s = ho_state(0.7);
  auto m = SystemModel::harmonic_well(1.0);
  EXPECT_EQ(w_value(c, m, s, Classical{}), Complex(1.0, 0.0));
  EXPECT_EQ(w_beta_derivative(c, m, s, Classical{}), Complex{});
  EXPECT_EQ(w_hamiltonian_variant(c, m, s, Classical{}), Complex(1.0, 0.0));
}

TEST(Commutation, EigenSeriesMatchesClosedFormKernel) {
  for (double mass : {1.0, 0.7}) {
    for (double omega : {1.0, 1.9}) {
      for (double hbar : {1.0, 0.6}) {
        for (double beta : {0.1, 0.5, 2.0}) {
          auto s = ho_state(beta);
          s.mass = mass;
          s.hbar = hbar;
          auto m = SystemModel::harmonic_well(omega);
          for (double q : {-1.3, 0.0, 0.8}) {
            for (double p : {-0.9, 0.4, 1.7}) {
              Complex ref = ho_commutation(q, p, beta, mass, omega, hbar);
              Complex got = w_value(point(q, p), m, s, EigenSeries{});
              EXPECT_NEAR(std::abs(got - ref), 0.0, 1e-10 * std::abs(ref)) << beta << " " << q << " " << p;
            }
          }
        }
      }
    }
  }
}

TEST(Commutation, EigenSeriesRequiresEigenbasis) {
  auto s = ho_state(1.0);
  EXPECT_THROW(w_value(point(0.1, 0.2), gaussian_fluid(), s, EigenSeries{}), std::invalid_argument);
  EigenSeries tight{10, 1e-12};
  EXPECT_THROW(w_value(point(0.1, 0.2), SystemModel::harmonic_well(1.0), s.with_beta(0.01), tight),
               NumericalError);
}

TEST(Commutation, WignerKirkwoodApproachesEigenSeries) {
  auto m = SystemModel::harmonic_well(1.0);
  auto max_dev = [&](double beta, int order) {
    double dev = 0.0;
    for (double q = -2.0; q <= 2.0; q += 0.5)
      for (double p = -2.0; p <= 2.0; p += 0.5) {
        auto c = point(q, p);
        dev = std::max(dev, std::abs(w_value(c, m, ho_state(beta), WignerKirkwood{order}) -
                                     w_value(c, m, ho_state(beta), EigenSeries{})));
      }
    return dev;
  };
  const double d1 = max_dev(0.1, 1), d2 = max_dev(0.1, 2);
  EXPECT_LT(d2, d1);
  EXPECT_LT(d2, 1e-3);
  EXPECT_GT(max_dev(0.2, 2) / max_dev(0.1, 2), 8.0);
}

TEST(Commutation, VanishesWithHbar) {
  std::mt19937_64 rng(2);
  auto c = random_config(rng, 3, 2, 2.0, 2.0);
  ThermoState s = ho_state(1.0, 2);
  s.hbar = 1e-7;
  for (const auto& spec : {CommutationSpec{WignerKirkwood{2}}, CommutationSpec{WignerKirkwood{1}}}) {
    EXPECT_NEAR(std::abs(w_value(c, gaussian_fluid(), s, spec) - 1.0), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(w_value(c, SystemModel::harmonic_well(1.3), s, spec) - 1.0), 0.0, 1e-6);
  }
}

TEST(Commutation, MomentumNegationConjugates) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = ho_state(0.3 + 0.1 * (trial % 5), 1 + trial % 2);
    auto c = random_config(rng, 2, s.dimension, 1.5, 1.5);
    PhaseConfig neg = c;
    for (double& p : neg.momenta()) p = -p;
    for (const auto& spec : kSpecs) {
      for (const auto& m : {SystemModel::harmonic_well(1.2), gaussian_fluid()}) {
        if (m.is_pair() && std::holds_alternative<EigenSeries>(spec)) continue;
        Complex w = w_value(c, m, s, spec), wn = w_value(neg, m, s, spec);
        EXPECT_NEAR(std::abs(wn - std::conj(w)), 0.0, 1e-12 * std::abs(w));
        EXPECT_NEAR(std::abs(w_beta_derivative(neg, m, s, spec) - std::conj(w_beta_derivative(c, m, s, spec))), 0.0,
                    1e-10 * (1 + std::abs(w)));
      }
    }
  }
}

TEST(Commutation, BetaDerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(4);
  const double h = 1e-4;
  for (int trial = 0; trial < 30; ++trial) {
    auto s = ho_state(0.5, 1 + trial % 3);
    auto c = random_config(rng, 3, s.dimension, 1.5, 1.5);
    for (const auto& spec : kSpecs) {
      for (const auto& m : {SystemModel::harmonic_well(0.8), gaussian_fluid()}) {
        if (m.is_pair() && std::holds_alternative<EigenSeries>(spec)) continue;
        Complex fd = (w_value(c, m, s.with_beta(s.beta + h), spec) - w_value(c, m, s.with_beta(s.beta - h), spec)) /
                     (2 * h);
        Complex an = w_beta_derivative(c, m, s, spec);
        EXPECT_NEAR(std::abs(an - fd), 0.0, 1e-6 * (1 + std::abs(an)));
      }
    }
  }
}

TEST(Commutation, HamiltonianVariant) {
  auto s = ho_state(0.5);
  auto m = SystemModel::harmonic_well(1.0);
  auto c = point(0.7, -0.4);
  const double H = hamiltonian(c, m, s);
  auto jet = commutation_jet(c, m, s, EigenSeries{});
  EXPECT_NEAR(std::abs(w_hamiltonian_variant(c, m, s, EigenSeries{}) - (jet.W - jet.dW_dbeta / H)), 0.0, 1e-14);
  EXPECT_THROW(w_hamiltonian_variant(point(0.0, 0.0), SystemModel::ideal_gas(), s, WignerKirkwood{2}), NumericalError);
  // W_H - W is second order in hbar at fixed beta.
  std::mt19937_64 rng(5);
  auto cc = random_config(rng, 3, 1, 1.5, 1.5);
  auto diff = [&](double hbar) {
    ThermoState t = s;
    t.hbar = hbar;
    return std::abs(w_hamiltonian_variant(cc, gaussian_fluid(), t, WignerKirkwood{2}) -
                    w_value(cc, gaussian_fluid(), t, WignerKirkwood{2}));
  };
  EXPECT_NEAR(diff(0.01) / diff(0.005), 2.0, 0.05);  // first-order imaginary piece dominates
}

TEST(Commutation, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    auto s = ho_state(0.6, 1 + trial % 2);
    auto c = random_config(rng, 2, s.dimension, 1.5, 1.5);
    for (const auto& spec : kSpecs) {
      for (const auto& m : {SystemModel::harmonic_well(0.9), gaussian_fluid(), SystemModel::ideal_gas()}) {
        if (m.is_pair() && std::holds_alternative<EigenSeries>(spec)) continue;
        auto weighted = [&](const PhaseConfig& x) {
          return std::exp(-s.beta * hamiltonian(x, m, s)) * w_value(x, m, s, spec);
        };
        auto g = w_gradients(c, m, s, spec);
        for (std::size_t a = 0; a < c.positions().size(); ++a) {
          PhaseConfig up = c, dn = c;
          up.positions()[a] += h;
          dn.positions()[a] -= h;
          Complex fdq = (weighted(up) - weighted(dn)) / (2 * h);
          EXPECT_NEAR(std::abs(g.grad_q[a] - fdq), 0.0, 1e-6 * (1 + std::abs(fdq)));
          up = c;
          dn = c;
          up.momenta()[a] += h;
          dn.momenta()[a] -= h;
          Complex fdp = (weighted(up) - weighted(dn)) / (2 * h);
          EXPECT_NEAR(std::abs(g.grad_p[a] - fdp), 0.0, 1e-6 * (1 + std::abs(fdp)));
        }
        if (m.is_ideal()) {
          for (auto v : g.grad_q) EXPECT_EQ(v, Complex{});
        }
      }
    }
  }
}

TEST(Commutation, DilationMatchesScaledFiniteDifference) {
  std::mt19937_64 rng(7);
  const double e = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    auto s = ho_state(0.6, 1);
    auto c = random_config(rng, 3, 1, 2.0, 1.5);
    for (const auto& spec : kSpecs) {
      for (const auto& m : {SystemModel::harmonic_well(0.9), gaussian_fluid()}) {
        if (m.is_pair() && std::holds_alternative<EigenSeries>(spec)) continue;
        auto scaled = [&](double eps) {
          PhaseConfig x = c;
          for (double& q : x.positions()) q *= 1 + eps;
          for (double& p : x.momenta()) p /= 1 + eps;
          return w_value(x, m, s, spec);
        };
        Complex fd = (scaled(e) - scaled(-e)) / (2 * e);
        Complex an = commutation_jet(c, m, s, spec, true).dilation;
        EXPECT_NEAR(std::abs(an - fd), 0.0, 1e-6 * (1 + std::abs(fd)));
      }
    }
  }
}
