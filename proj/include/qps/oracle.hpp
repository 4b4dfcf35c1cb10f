// Exact references: ideal-gas loop series, harmonic-oscillator partition
// functions, the Poisson grand ideal gas, and deterministic phase-space
// quadrature for d = 1, N <= 3.

#ifndef QPS_ORACLE_HPP
#define QPS_ORACLE_HPP

#include <functional>
#include <numeric>

#include "qps/commutation.hpp"
#include "qps/symmetrization.hpp"

namespace qps {

// ---------------------------------------------------------------------------
// Closed forms

/// -beta Omega^(l) of the ideal gas: s^(l-1) z^l V / (Lambda^d l^(1+d/2)).
/// l = 1 gives the monomer term z V / Lambda^d.
inline double ideal_gas_loop_term(int l, const ThermoState& s) {
  if (l < 1) throw std::invalid_argument("ideal_gas_loop_term: l must be at least 1");
  const double lam = thermal_wavelength(s);
  const int d = s.dimension;
  double sign = 1.0;
  if (l > 1) {
    const int e = exchange_sign(s.statistics);
    if (e == 0) return 0.0;
    if (e < 0 && (l - 1) % 2 == 1) sign = -1.0;
  }
  return sign * std::pow(s.fugacity, l) * s.volume() / (std::pow(lam, d) * std::pow(l, 1.0 + 0.5 * d));
}

/// Ideal-gas loop energy E_l = -d/dbeta(-beta Omega^(l)) = (d / 2 beta)(-beta Omega^(l)).
inline double ideal_gas_loop_energy(int l, const ThermoState& s) {
  return 0.5 * s.dimension / s.beta * ideal_gas_loop_term(l, s);
}

/// Ideal-gas loop contribution to C_V / k_B: (d/2)(1 + d/2)(-beta Omega^(l)).
inline double ideal_gas_loop_heat_capacity(int l, const ThermoState& s) {
  const double d = s.dimension;
  return 0.5 * d * (1.0 + 0.5 * d) * ideal_gas_loop_term(l, s);
}

struct PoissonIdealGas {
  double mean_n, var_n, beta_pv, energy;
};

inline PoissonIdealGas poisson_ideal_gas(const ThermoState& s) {
  const double n = ideal_gas_loop_term(1, s);
  return {n, n, n, 0.5 * s.dimension * n / s.beta};
}

/// Z_1(beta) = sum_n e^{-beta hbar omega (n + 1/2)} = 1 / (2 sinh(beta hbar omega / 2)).
inline double ho_z1(double beta, double hbar_omega) { return 0.5 / std::sinh(0.5 * beta * hbar_omega); }

/// -dZ_1/dbeta.
inline double ho_z1_energy_moment(double beta, double hw) {
  const double x = 0.5 * beta * hw;
  return 0.25 * hw * std::cosh(x) / (std::sinh(x) * std::sinh(x));
}

/// Canonical N-particle partition function of noninteracting 1D oscillators,
/// N in {1, 2, 3}, from the cycle-index formula.
inline double ho_exact_partition(double beta, double hbar_omega, int n_particles, Statistics st) {
  const double e = exchange_sign(st);
  auto z = [&](int k) { return ho_z1(k * beta, hbar_omega); };
  if (st != Statistics::Boltzmann) {
    // product forms avoid cancellation at low temperature
    const double q = std::exp(-beta * hbar_omega);
    const bool fermi = st == Statistics::Fermi;
    switch (n_particles) {
      case 0: return 1.0;
      case 1: return z(1);
      case 2: return q * (fermi ? q : 1.0) / ((1 - q) * (1 - q * q));
      case 3: return std::pow(q, 1.5) * (fermi ? q * q * q : 1.0) / ((1 - q) * (1 - q * q) * (1 - q * q * q));
    }
  }
  switch (n_particles) {
    case 0: return 1.0;
    case 1: return z(1);
    case 2: return 0.5 * (z(1) * z(1) + e * z(2));
    case 3: return (z(1) * z(1) * z(1) + 3.0 * e * z(2) * z(1) + 2.0 * e * e * z(3)) / 6.0;
  }
  throw std::invalid_argument("ho_exact_partition: n_particles must be 0..3");
}

/// Grand average energy -d ln(sum_N z^N Z_N)/dbeta for N <= n_max, by
/// central differences of the closed forms with a step small enough for
/// ~1e-10 relative accuracy.
inline double ho_exact_grand_energy(double beta, double hbar_omega, double z, int n_max, Statistics st) {
  auto ln_xi = [&](double b) {
    double xi = 0.0;
    for (int n = 0; n <= n_max; ++n) xi += std::pow(z, n) * ho_exact_partition(b, hbar_omega, n, st);
    return std::log(xi);
  };
  const double h = 1e-4 * beta;
  // Richardson-extrapolated central difference, O(h^4)
  const double d1 = (ln_xi(beta + h) - ln_xi(beta - h)) / (2 * h);
  const double d2 = (ln_xi(beta + 2 * h) - ln_xi(beta - 2 * h)) / (4 * h);
  return -(4.0 * d1 - d2) / 3.0;
}

/// Particle in a hard 1D box: Z_1 = sum_k exp(-beta E_k) and its L derivative.
inline double box_z1(const ThermoState& s, double L) {
  BoxBasis b{s.mass, L, s.hbar};
  double z = 0.0;
  for (int k = 0;; ++k) {
    double t = std::exp(-s.beta * b.energy(k));
    z += t;
    if (t < 1e-18 * z) break;
  }
  return z;
}

/// beta p = d ln Z_1 / dL for one particle in a hard box (E_k ~ L^-2).
inline double box_exact_pressure(const ThermoState& s, double L) {
  BoxBasis b{s.mass, L, s.hbar};
  double z = 0.0, dz = 0.0;
  for (int k = 0;; ++k) {
    const double e = b.energy(k);
    const double t = std::exp(-s.beta * e);
    z += t;
    dz += t * s.beta * 2.0 * e / L;
    if (t < 1e-18 * z) break;
  }
  return dz / z;
}

// ---------------------------------------------------------------------------
// Quadrature rules

/// Nodes/weights for \int f(x) dx over the rule's domain.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int exact_degree = 0;  // polynomial degree integrated exactly against the base weight
  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre on [a, b]; exact for polynomials of degree 2n - 1.
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  r.exact_degree = 2 * n - 1;
  const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1);
      }
      pp = n * (x * p1 - p2) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // recompute derivative at converged node
    double p1 = 1.0, p2 = 0.0;
    for (int j = 0; j < n; ++j) {
      double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1);
    }
    pp = n * (x * p1 - p2) / (x * x - 1.0);
    r.nodes[i] = xm - xl * x;
    r.nodes[n - 1 - i] = xm + xl * x;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 * xl / ((1.0 - x * x) * pp * pp);
  }
  return r;
}

/// Gauss-Hermite for \int e^{-t^2} f(t) dt; exact for degree 2n - 1.
/// Uses the orthonormal recurrence, stable for large n.
inline QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  r.exact_degree = 2 * n - 1;
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  double z = 0.0;
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    if (i == 0) z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1) z -= 1.14 * std::pow(n, 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3) z = 1.91 * z - 0.91 * r.nodes[1];
    else z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / (pp * pp);
  }
  std::reverse(r.nodes.begin(), r.nodes.end());
  std::reverse(r.weights.begin(), r.weights.end());
  return r;
}

/// Hermite rule remapped to \int f(x) dx with x = center + scale t; the
/// Gaussian weight is divided out, so f should decay like e^{-t^2}.
inline QuadratureRule scaled_hermite(int n, double center, double scale) {
  QuadratureRule base = gauss_hermite(n);
  QuadratureRule r = base;
  for (int i = 0; i < n; ++i) {
    const double t = base.nodes[i];
    r.nodes[i] = center + scale * t;
    r.weights[i] = scale * base.weights[i] * std::exp(t * t);
  }
  return r;
}

/// Tensor grid for N particles in d = 1; every particle uses the same q
/// and p rules.
struct QuadratureGrid {
  QuadratureRule q;
  QuadratureRule p;
  int n_particles = 1;

  void validate() const {
    if (n_particles < 1 || n_particles > 3) throw std::invalid_argument("QuadratureGrid: N must be 1..3");
    if (q.size() == 0 || p.size() == 0) throw std::invalid_argument("QuadratureGrid: empty rule");
  }
};

// ---------------------------------------------------------------------------
// Phase-space integrals

/// Raw integrals over dGamma (no 1/(h^N N!)), with eta the symmetrization
/// function (or 1):
///   weight          \int e^{-bH} W eta
///   energy_w        \int e^{-bH} H W eta
///   energy_wh       \int e^{-bH} H W_H eta   (= \int S_E eta)
///   beta_derivative \int e^{-bH} dW/dbeta eta
///   abs_weight      \int e^{-bH} |W|
struct PhaseMoments {
  Complex weight{}, energy_w{}, energy_wh{}, beta_derivative{};
  double abs_weight = 0.0;
};

namespace detail {

struct AxisTable {
  std::size_t nq = 0, np = 0;
  std::vector<Complex> S, SE;
  std::vector<double> H;
  std::size_t at(std::size_t iq, std::size_t ip) const { return iq * np + ip; }
};

inline AxisTable axis_table(const SystemModel& m, const ThermoState& s, const CommutationSpec& spec,
                            const QuadratureGrid& g) {
  AxisTable t;
  t.nq = g.q.size();
  t.np = g.p.size();
  t.S.resize(t.nq * t.np);
  t.SE.resize(t.nq * t.np);
  t.H.resize(t.nq * t.np);
  for (std::size_t i = 0; i < t.nq; ++i)
    for (std::size_t j = 0; j < t.np; ++j) {
      PhaseConfig c(1);
      double q[1] = {g.q.nodes[i]}, p[1] = {g.p.nodes[j]};
      c.add_particle(q, p);
      const double H = hamiltonian(c, m, s);
      const std::size_t k = t.at(i, j);
      t.H[k] = H;
      if (auto* es = std::get_if<EigenSeries>(&spec)) {
        const WeightedW w = weighted_commutation(c, m, s, *es);
        t.S[k] = w.S;
        t.SE[k] = w.S_E;
      } else {
        const auto jet = commutation_jet(c, m, s, spec);
        const double boltz = std::exp(-s.beta * H);
        t.S[k] = boltz * jet.W;
        t.SE[k] = boltz * (H * jet.W - jet.dW_dbeta);
      }
    }
  return t;
}

}  // namespace detail

/// Phase-space moments for N noninteracting particles in d = 1 using the
/// product form of e^{-beta H} W. With `conjugate_pairing` the integrand is
/// W_q eta_p = (W_p eta_q)^*.
inline PhaseMoments phase_space_moments(const SystemModel& m, const ThermoState& s, const CommutationSpec& spec,
                                        const QuadratureGrid& g, bool symmetrize, bool conjugate_pairing = false) {
  g.validate();
  if (s.dimension != 1) throw std::invalid_argument("phase_space_moments: quadrature requires dimension 1");
  if (m.is_pair() || std::holds_alternative<WignerKirkwood>(spec))
    throw std::invalid_argument("phase_space_moments: product form requires a noninteracting model and exact W");
  const auto t = detail::axis_table(m, s, spec, g);
  const std::size_t n = static_cast<std::size_t>(g.n_particles);
  const std::size_t cells = t.nq * t.np;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= cells;
  const auto graph = NeighborGraph::complete(n);
  const std::size_t lmax = std::max<std::size_t>(n, 2);

  PhaseMoments out;
  PhaseConfig c(1);
  c.resize(n);
  std::vector<std::size_t> idx(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    double wt = 1.0, H = 0.0;
    Complex S{1.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      idx[i] = r % cells;
      r /= cells;
      const std::size_t iq = idx[i] / t.np, ip = idx[i] % t.np;
      wt *= g.q.weights[iq] * g.p.weights[ip];
      S *= t.S[idx[i]];
      H += t.H[idx[i]];
      c.positions()[i] = g.q.nodes[iq];
      c.momenta()[i] = g.p.nodes[ip];
    }
    if (wt == 0.0) continue;
    Complex SE{};
    for (std::size_t i = 0; i < n; ++i) {
      Complex others{1.0, 0.0};
      for (std::size_t k = 0; k < n; ++k)
        if (k != i) others *= t.S[idx[k]];
      SE += t.SE[idx[i]] * others;
    }
    Complex eta{1.0, 0.0};
    if (symmetrize && n > 1) eta = full_eta_truncated(c, s, graph, lmax, true);
    Complex sw = S * eta, se = SE * eta, sh = H * S * eta;
    if (conjugate_pairing) {
      sw = std::conj(sw);
      se = std::conj(se);
      sh = std::conj(sh);
    }
    out.weight += wt * sw;
    out.energy_w += wt * sh;
    out.energy_wh += wt * se;
    out.beta_derivative += wt * (sh - se);
    out.abs_weight += wt * std::abs(S);
  }
  return out;
}

/// Default grid for a noninteracting 1D model: scaled Gauss-Hermite for the
/// oscillator, matched to the Gaussian envelope of |e^{-beta H} W| and
/// widened by `widen`; Gauss-Legendre on [0, L] x [-P, P] for the box.
inline QuadratureGrid default_grid(const SystemModel& m, const ThermoState& s, int n_particles, int nq, int np,
                                   double widen = 1.0) {
  QuadratureGrid g;
  g.n_particles = n_particles;
  if (auto* h = std::get_if<HarmonicWell>(&m.kind())) {
    // |S| ~ exp(-tanh(t) (x^2 + k^2) / 2) in oscillator units
    const double x0 = std::sqrt(s.hbar / (s.mass * h->omega));
    const double t = s.beta * s.hbar * h->omega;
    const double a = std::sqrt(2.0 / std::tanh(t)) * widen;
    g.q = scaled_hermite(nq, 0.0, a * x0);
    g.p = scaled_hermite(np, 0.0, a * s.hbar / x0);
    return g;
  }
  if (m.is_box()) {
    // The hard walls give e^{-beta H} W algebraic momentum tails, so the
    // momentum window is finite and the q rule must resolve e^{-ipq/hbar}
    // across it. The truncation error falls as P^-3.
    const double P = 64.0 * widen * std::sqrt(s.mass / s.beta);
    const int n = static_cast<int>(0.5 * P * s.box_edge / s.hbar) + 16;
    g.q = gauss_legendre(std::max(nq, n), 0.0, s.box_edge);
    g.p = gauss_legendre(std::max(np, n), -P, P);
    return g;
  }
  throw std::invalid_argument("default_grid: model has no quadrature oracle");
}

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // difference against a refined grid
  double imag = 0.0;
};

struct QuadratureOptions {
  int nq = 48;
  int np = 48;
  double refine = 1.25;
};

/// Z_N = (1 / (h^N N!)) \int dGamma e^{-beta H} W_p eta_q (d = 1). The Xi
/// contribution is z^N Z_N. The error is the change under grid refinement.
inline QuadratureResult quadrature_partition(const SystemModel& m, const ThermoState& s, const CommutationSpec& spec,
                                             int n_particles, bool symmetrize, QuadratureOptions opt = {}) {
  auto eval = [&](int nq, int np, double widen) {
    auto g = default_grid(m, s, n_particles, nq, np, widen);
    auto mom = phase_space_moments(m, s, spec, g, symmetrize);
    double norm = std::pow(s.planck(), n_particles);
    for (int k = 2; k <= n_particles; ++k) norm *= k;
    return mom.weight / norm;
  };
  if (m.is_box()) {
    // Richardson step on the P^-3 momentum-window error.
    const Complex v1 = eval(opt.nq, opt.np, 1.0);
    const Complex v2 = eval(opt.nq, opt.np, 2.0);
    const Complex r = (8.0 * v2 - v1) / 7.0;
    return {r.real(), std::abs(r - v2), r.imag()};
  }
  const Complex v = eval(opt.nq, opt.np, 1.0);
  const Complex r = eval(static_cast<int>(opt.nq * opt.refine), static_cast<int>(opt.np * opt.refine), 1.0);
  return {r.real(), std::abs(r - v), r.imag()};
}

/// The eight energy routes on the quadrature path. Grand sums over
/// N = 0..n_max with fugacity z; see README for the route definitions.
struct QuadratureEnergyRoutes {
  // index: pairing (0: W_p eta_q, 1: W_q eta_p) * 4 + kernel (0: W, 1: W_H) * 2 + form (0: trace, 1: derivative)
  std::array<double, 8> value{};
  std::array<double, 8> imag{};
  double exact = 0.0;
  double vanishing_ratio = 0.0;  // max_N |\int S' eta| / \int |S|
};

inline QuadratureEnergyRoutes quadrature_energy_routes(const SystemModel& m, const ThermoState& s,
                                                       const CommutationSpec& spec, int n_max, int nq, int np) {
  if (n_max < 1 || n_max > 3) throw std::invalid_argument("quadrature_energy_routes: n_max must be 1..3");
  QuadratureEnergyRoutes out;
  for (int pairing = 0; pairing < 2; ++pairing) {
    // grand sums with and without symmetrization
    Complex xi{1.0, 0.0}, e_w{}, e_wh{}, xi1{1.0, 0.0}, e1_w{}, e1_wh{};
    for (int n = 1; n <= n_max; ++n) {
      auto g = default_grid(m, s, n, nq, np);
      double norm = std::pow(s.planck(), n);
      for (int k = 2; k <= n; ++k) norm *= k;
      const double zn = std::pow(s.fugacity, n) / norm;
      auto full = phase_space_moments(m, s, spec, g, true, pairing == 1);
      auto mono = phase_space_moments(m, s, spec, g, false, pairing == 1);
      xi += zn * full.weight;
      e_w += zn * full.energy_w;
      e_wh += zn * full.energy_wh;
      xi1 += zn * mono.weight;
      e1_w += zn * mono.energy_w;
      e1_wh += zn * mono.energy_wh;
      if (pairing == 0)
        out.vanishing_ratio = std::max(out.vanishing_ratio, std::abs(full.beta_derivative) / full.abs_weight);
    }
    for (int kernel = 0; kernel < 2; ++kernel) {
      const Complex e_full = kernel == 0 ? e_w : e_wh;
      const Complex e_mono = kernel == 0 ? e1_w : e1_wh;
      // trace form: <H>_{K, eta}
      const Complex trace = e_full / xi;
      // derivative form: -d ln Xi_1 - d ln <eta>, with <eta> = Xi / Xi_1
      const Complex e1 = e_mono / xi1;
      const Complex eta_avg = xi / xi1;
      const Complex cov = (e_full / xi1 - e1 * eta_avg) / eta_avg;
      const Complex deriv = e1 + cov;
      const int base = pairing * 4 + kernel * 2;
      out.value[base] = trace.real();
      out.imag[base] = trace.imag();
      out.value[base + 1] = deriv.real();
      out.imag[base + 1] = deriv.imag();
    }
  }
  if (auto* h = std::get_if<HarmonicWell>(&m.kind()))
    out.exact = ho_exact_grand_energy(s.beta, s.hbar * h->omega, s.fugacity, n_max, s.statistics);
  return out;
}

/// Numerical dimer integral: the literal loop factor averaged over the
/// Maxwell-Boltzmann momenta of both particles and integrated over their
/// separation, giving -beta Omega^(2) / V for the ideal gas (d = 1..3).
/// Momenta are integrated with Gauss-Hermite, the radial separation with
/// Gauss-Legendre on [0, 2.5 Lambda].
inline double numeric_dimer_term(const ThermoState& s, int n_p = 100, int n_r = 120) {
  const int d = s.dimension;
  const double lam = thermal_wavelength(s);
  const double sigma_p = std::sqrt(s.mass / s.beta);
  const auto gh = gauss_hermite(n_p);
  // Along the separation axis only: transverse momentum components cancel
  // in the dimer exponent.
  auto avg_factor = [&](double r) {
    Complex sum{};
    for (int a = 0; a < n_p; ++a)
      for (int b = 0; b < n_p; ++b) {
        const double p1 = std::sqrt(2.0) * sigma_p * gh.nodes[a];
        const double p2 = std::sqrt(2.0) * sigma_p * gh.nodes[b];
        PhaseConfig c(1);
        double q1[1] = {0.0}, q2[1] = {r}, pp1[1] = {p1}, pp2[1] = {p2};
        c.add_particle(q1, pp1);
        c.add_particle(q2, pp2);
        ThermoState open = s;
        open.boundary = Boundary::Open;
        open.dimension = 1;
        sum += gh.weights[a] * gh.weights[b] * dimer_factor(c, 0, 1, open);
      }
    return sum.real() / std::numbers::pi;
  };
  // the integrand falls as exp(-2 pi r^2 / Lambda^2); 2.5 Lambda keeps the
  // momentum phase resolvable by the Hermite rule
  const auto gl = gauss_legendre(n_r, 0.0, 2.5 * lam);
  double shell_const = d == 1 ? 2.0 : (d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi);
  double integral = 0.0;
  for (int i = 0; i < n_r; ++i) {
    const double r = gl.nodes[i];
    integral += gl.weights[i] * shell_const * std::pow(r, d - 1) * avg_factor(r);
  }
  // -beta Omega^(2) / V = (1/2) (z / Lambda^d)^2 \int d^d r <eta_jk>
  const double rho = s.fugacity / std::pow(lam, d);
  return 0.5 * rho * rho * integral;
}

/// Sum over all N! permutations P of (+-1)^P exp(-i sum_j (p_{P j} - p_j) . q_j / hbar),
/// open boundaries. Independent of the loop decomposition; N <= 8.
inline Complex permutation_sum_eta(const PhaseConfig& c, const ThermoState& s) {
  const std::size_t n = c.size();
  if (n > 8) throw std::invalid_argument("permutation_sum_eta: at most 8 particles");
  const int sign = exchange_sign(s.statistics);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Complex total{};
  do {
    // parity from the inversion count
    int inversions = 0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) inversions += perm[a] > perm[b];
    const bool identity = std::is_sorted(perm.begin(), perm.end());
    double weight = 1.0;
    if (sign == 0) weight = identity ? 1.0 : 0.0;
    else if (sign < 0 && inversions % 2) weight = -1.0;
    if (weight == 0.0) continue;
    double phase = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (int a = 0; a < c.dimension(); ++a)
        phase += (c.momentum(perm[j])[a] - c.momentum(j)[a]) * c.position(j)[a];
    total += weight * std::exp(Complex(0.0, -phase / s.hbar));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

}  // namespace qps

#endif  // QPS_ORACLE_HPP
