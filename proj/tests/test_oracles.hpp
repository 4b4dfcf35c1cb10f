// Test-only reference implementations, written independently of the
// library code they check.

#ifndef QPS_TEST_ORACLES_HPP
#define QPS_TEST_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "qps/core.hpp"

namespace qps::testing {

inline int permutation_parity(const std::vector<std::size_t>& perm) {
  int swaps = 0;
  std::vector<char> seen(perm.size(), 0);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = perm[j]) {
      seen[j] = 1;
      ++len;
    }
    swaps += static_cast<int>(len) - 1;
  }
  return swaps % 2 == 0 ? 1 : -1;
}

/// sum over permutations P of (+-1)^P <P p|q> / <p|q> for plane waves
/// <r|p> = exp(i p r / hbar), open boundaries.
inline std::complex<double> brute_force_eta(const PhaseConfig& c, double hbar, int sign) {
  const std::size_t n = c.size();
  const int d = c.dimension();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::complex<double> total{};
  do {
    double phase = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (int a = 0; a < d; ++a) phase += (c.momentum(perm[j])[a] - c.momentum(j)[a]) * c.position(j)[a];
    double weight = sign >= 0 ? 1.0 : permutation_parity(perm);
    bool identity = std::is_sorted(perm.begin(), perm.end());
    if (sign == 0 && !identity) weight = 0.0;
    total += weight * std::exp(std::complex<double>(0.0, -phase / hbar));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// 1D harmonic oscillator mixed kernel e^{-beta H} W_p in closed form:
///   sech^{1/2}(t) exp(-tanh(t) (x^2 + k^2)/2 - i x k (1 - sech t)),
/// t = beta hbar omega, x = q / x0, k = p x0 / hbar.
inline std::complex<double> ho_weighted_kernel(double q, double p, double beta, double mass, double omega,
                                               double hbar) {
  const double x0 = std::sqrt(hbar / (mass * omega));
  const double t = beta * hbar * omega;
  const double x = q / x0, k = p * x0 / hbar;
  const double sech = 1.0 / std::cosh(t);
  return std::sqrt(sech) * std::exp(std::complex<double>(-std::tanh(t) * (x * x + k * k) / 2.0, -x * k * (1.0 - sech)));
}

inline std::complex<double> ho_commutation(double q, double p, double beta, double mass, double omega, double hbar) {
  const double H = p * p / (2 * mass) + 0.5 * mass * omega * omega * q * q;
  return ho_weighted_kernel(q, p, beta, mass, omega, hbar) * std::exp(beta * H);
}

inline PhaseConfig random_config(std::mt19937_64& rng, std::size_t n, int d, double qspan, double pspan) {
  std::uniform_real_distribution<double> uq(0.0, qspan), up(-pspan, pspan);
  PhaseConfig c(d);
  std::vector<double> q(d), p(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      q[a] = uq(rng);
      p[a] = up(rng);
    }
    c.add_particle(q, p);
  }
  return c;
}

}  // namespace qps::testing

#endif  // QPS_TEST_ORACLES_HPP
