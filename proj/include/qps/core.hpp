// Domain types shared by every module: thermodynamic state, phase-space
// configurations, physical models and their Hamiltonians.
//
// Everything here is a value type. Operations are pure functions of their
// arguments, so configurations and models can be copied freely between
// worker threads.

#ifndef QPS_CORE_HPP
#define QPS_CORE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qps {

using Complex = std::complex<double>;

/// Complex commutation / symmetrization factor carried through ratio
/// estimators.
using ComplexWeight = Complex;

/// Raised when a numerical procedure cannot deliver its declared accuracy
/// (singular phase point, unachievable truncation, quadrature window too
/// small).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Statistics { Bose, Fermi, Boltzmann };
enum class Boundary { Periodic, Open };

inline const char* to_string(Statistics s) {
  switch (s) {
    case Statistics::Bose: return "bose";
    case Statistics::Fermi: return "fermi";
    case Statistics::Boltzmann: return "boltzmann";
  }
  return "?";
}

/// +1 for bosons, -1 for fermions, 0 when exchange is switched off.
/// An l-loop carries the prefactor sign^(l-1).
inline int exchange_sign(Statistics s) {
  switch (s) {
    case Statistics::Bose: return 1;
    case Statistics::Fermi: return -1;
    case Statistics::Boltzmann: return 0;
  }
  return 0;
}

struct ThermoState {
  double beta = 1.0;       // 1 / k_B T
  double fugacity = 0.1;   // z = exp(beta mu)
  double box_edge = 10.0;  // L
  int dimension = 3;
  Statistics statistics = Statistics::Boltzmann;
  double mass = 1.0;
  double hbar = 1.0;
  Boundary boundary = Boundary::Periodic;

  double volume() const { return std::pow(box_edge, dimension); }
  double planck() const { return 2.0 * std::numbers::pi * hbar; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
      if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
    };
    require(std::isfinite(beta) && beta > 0, "beta", "must be positive");
    require(std::isfinite(fugacity) && fugacity > 0, "fugacity", "must be positive");
    require(std::isfinite(box_edge) && box_edge > 0, "box_edge", "must be positive");
    require(std::isfinite(mass) && mass > 0, "mass", "must be positive");
    require(std::isfinite(hbar) && hbar > 0, "hbar", "must be positive");
    require(dimension >= 1 && dimension <= 3, "dimension", "must be 1, 2 or 3");
  }

  ThermoState with_beta(double b) const {
    ThermoState s = *this;
    s.beta = b;
    return s;
  }
  ThermoState with_statistics(Statistics st) const {
    ThermoState s = *this;
    s.statistics = st;
    return s;
  }
};

/// Lambda = sqrt(2 pi hbar^2 beta / m).
inline double thermal_wavelength(const ThermoState& s) {
  return std::sqrt(2.0 * std::numbers::pi * s.hbar * s.hbar * s.beta / s.mass);
}

// ---------------------------------------------------------------------------
// Geometry helpers

inline double wrap_coordinate(double x, double L) {
  double w = x - L * std::floor(x / L);
  return w >= L ? 0.0 : w;
}

inline double minimum_image(double dx, double L) {
  if (std::abs(dx) <= 0.5 * L) return dx;
  return dx - L * std::nearbyint(dx / L);
}

/// Displacement component a - b, minimum-imaged when the box is periodic.
inline double displacement(double a, double b, const ThermoState& s) {
  double dx = a - b;
  return s.boundary == Boundary::Periodic ? minimum_image(dx, s.box_edge) : dx;
}

// ---------------------------------------------------------------------------
// Phase-space point with variable particle number.

class PhaseConfig {
 public:
  explicit PhaseConfig(int dimension = 3) : dim_(dimension) {
    if (dimension < 1 || dimension > 3) throw std::invalid_argument("PhaseConfig: dimension must be 1..3");
  }

  int dimension() const { return dim_; }
  std::size_t size() const { return q_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return q_.empty(); }

  std::span<double> position(std::size_t i) { return {q_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<const double> position(std::size_t i) const {
    return {q_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> momentum(std::size_t i) { return {p_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<const double> momentum(std::size_t i) const {
    return {p_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }

  // Flat N*d storage, particle-major.
  std::vector<double>& positions() { return q_; }
  const std::vector<double>& positions() const { return q_; }
  std::vector<double>& momenta() { return p_; }
  const std::vector<double>& momenta() const { return p_; }

  void add_particle(std::span<const double> q, std::span<const double> p) {
    if (q.size() != static_cast<std::size_t>(dim_) || p.size() != static_cast<std::size_t>(dim_))
      throw std::invalid_argument("PhaseConfig::add_particle: wrong component count");
    q_.insert(q_.end(), q.begin(), q.end());
    p_.insert(p_.end(), p.begin(), p.end());
  }

  /// Removes particle i by moving the last particle into its slot.
  void remove_particle(std::size_t i) {
    if (i >= size()) throw std::out_of_range("PhaseConfig::remove_particle");
    std::size_t last = size() - 1;
    if (i != last) {
      std::copy_n(q_.begin() + last * dim_, dim_, q_.begin() + i * dim_);
      std::copy_n(p_.begin() + last * dim_, dim_, p_.begin() + i * dim_);
    }
    q_.resize(last * dim_);
    p_.resize(last * dim_);
  }

  void resize(std::size_t n) {
    q_.resize(n * dim_, 0.0);
    p_.resize(n * dim_, 0.0);
  }

  void wrap(double L) {
    for (double& x : q_) x = wrap_coordinate(x, L);
  }

  friend bool operator==(const PhaseConfig&, const PhaseConfig&) = default;

 private:
  int dim_;
  std::vector<double> q_;
  std::vector<double> p_;
};

inline double kinetic_energy(const PhaseConfig& c, const ThermoState& s) {
  double sum = 0.0;
  for (double p : c.momenta()) sum += p * p;
  return sum / (2.0 * s.mass);
}

// ---------------------------------------------------------------------------
// Pair interactions. A pair function supplies u(r) and its first three radial
// derivatives; the third derivative is needed by the gradient of the
// second-order Wigner-Kirkwood term.

struct PairFunction {
  enum class Kind { SoftSphere, GaussianCore };
  Kind kind = Kind::SoftSphere;
  double epsilon = 1.0;
  double sigma = 1.0;
  int exponent = 12;  // soft spheres only

  /// Returns {u, u', u'', u'''} at separation r.
  std::array<double, 4> derivatives(double r) const {
    if (kind == Kind::SoftSphere) {
      if (r <= 0.0) {
        double inf = std::numeric_limits<double>::infinity();
        return {inf, -inf, inf, -inf};
      }
      double n = exponent;
      double u = epsilon * std::pow(sigma / r, n);
      return {u, -n * u / r, n * (n + 1) * u / (r * r), -n * (n + 1) * (n + 2) * u / (r * r * r)};
    }
    double s2 = sigma * sigma;
    double x = r * r / s2;
    double u = epsilon * std::exp(-x);
    double d1 = -2.0 * r / s2 * u;
    double d2 = (4.0 * r * r / (s2 * s2) - 2.0 / s2) * u;
    double d3 = (12.0 * r / (s2 * s2) - 8.0 * r * r * r / (s2 * s2 * s2)) * u;
    return {u, d1, d2, d3};
  }
  double value(double r) const { return derivatives(r)[0]; }
};

// ---------------------------------------------------------------------------
// Single-particle eigenbases for 1D models. Wavefunctions are real; the
// momentum amplitude is  phi~_n(p) = \int dr phi_n(r) exp(i p r / hbar).

/// Harmonic oscillator Hermite functions.
struct HarmonicBasis {
  double mass = 1.0, omega = 1.0, hbar = 1.0;

  double length_scale() const { return std::sqrt(hbar / (mass * omega)); }
  double energy(int n) const { return hbar * omega * (n + 0.5); }

  /// Fills psi_0..psi_{n-1} of the dimensionless argument xi.
  static void hermite_functions(double xi, std::span<double> out) {
    if (out.empty()) return;
    out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
    if (out.size() > 1) out[1] = std::sqrt(2.0) * xi * out[0];
    for (std::size_t n = 1; n + 1 < out.size(); ++n) {
      double k = static_cast<double>(n);
      out[n + 1] = std::sqrt(2.0 / (k + 1)) * xi * out[n] - std::sqrt(k / (k + 1)) * out[n - 1];
    }
  }

  /// Wavefunctions phi_n(q) and, if requested, d phi_n / dq.
  void wavefunctions(double q, std::span<double> phi, std::span<double> dphi = {}) const {
    const double x0 = length_scale();
    const std::size_t n = phi.size();
    std::vector<double> psi(n + 1);
    hermite_functions(q / x0, psi);
    const double norm = 1.0 / std::sqrt(x0);
    for (std::size_t k = 0; k < n; ++k) phi[k] = norm * psi[k];
    if (!dphi.empty()) {
      for (std::size_t k = 0; k < n; ++k) {
        double lower = k > 0 ? std::sqrt(k / 2.0) * psi[k - 1] : 0.0;
        double upper = std::sqrt((k + 1) / 2.0) * psi[k + 1];
        dphi[k] = norm / x0 * (lower - upper);
      }
    }
  }

  /// Momentum amplitudes phi~_n(p) = sqrt(2 pi x0) i^n psi_n(p x0 / hbar).
  void momentum_amplitudes(double p, std::span<Complex> amp, std::span<Complex> damp = {}) const {
    const double x0 = length_scale();
    const std::size_t n = amp.size();
    std::vector<double> psi(n + 1);
    hermite_functions(p * x0 / hbar, psi);
    const double norm = std::sqrt(2.0 * std::numbers::pi * x0);
    static constexpr Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (std::size_t k = 0; k < n; ++k) amp[k] = norm * ipow[k % 4] * psi[k];
    if (!damp.empty()) {
      for (std::size_t k = 0; k < n; ++k) {
        double lower = k > 0 ? std::sqrt(k / 2.0) * psi[k - 1] : 0.0;
        double upper = std::sqrt((k + 1) / 2.0) * psi[k + 1];
        damp[k] = norm * ipow[k % 4] * (x0 / hbar) * (lower - upper);
      }
    }
  }
};

/// Hard-walled box [0, L]; index k labels the state with k+1 half-waves.
struct BoxBasis {
  double mass = 1.0, length = 1.0, hbar = 1.0;

  double wavenumber(int k) const { return (k + 1) * std::numbers::pi / length; }
  double energy(int k) const {
    double kn = wavenumber(k) * hbar;
    return kn * kn / (2.0 * mass);
  }

  void wavefunctions(double q, std::span<double> phi) const {
    const double norm = std::sqrt(2.0 / length);
    const bool inside = q >= 0.0 && q <= length;
    for (std::size_t k = 0; k < phi.size(); ++k)
      phi[k] = inside ? norm * std::sin(wavenumber(static_cast<int>(k)) * q) : 0.0;
  }

  void momentum_amplitudes(double p, std::span<Complex> amp) const {
    const double norm = std::sqrt(2.0 / length);
    const double kappa = p / hbar;
    const Complex phase = std::exp(Complex(0.0, kappa * length));
    for (std::size_t k = 0; k < amp.size(); ++k) {
      const double kn = wavenumber(static_cast<int>(k));
      const double sign = (k % 2 == 0) ? -1.0 : 1.0;  // cos(kn L) = (-1)^(k+1)
      const double den = kn * kn - kappa * kappa;
      Complex integral;
      if (std::abs(den) > 1e-6 * kn * kn) {
        // \int_0^L sin(kn x) e^{i kappa x} dx
        integral = kn * (1.0 - sign * phase) / den;
      } else {
        // Removable singularity at kappa = s kn, expanded to first order in
        // delta = kappa - s kn.
        const double s = kappa >= 0 ? 1.0 : -1.0;
        const double delta = kappa - s * kn;
        integral = Complex(0.0, s * length / 2.0) +
                   delta * Complex(-s * length * length / 4.0, -length / (4.0 * kn));
      }
      amp[k] = norm * integral;
    }
  }
};

// ---------------------------------------------------------------------------
// Physical models.

struct IdealGas {};
struct HarmonicWell {
  double omega = 1.0;
};
struct PairPotential {
  PairFunction pair;
  double cutoff = 2.5;
};
struct ParticleInBox {};

using ModelKind = std::variant<IdealGas, HarmonicWell, PairPotential, ParticleInBox>;

using Eigenbasis = std::variant<HarmonicBasis, BoxBasis>;

/// Derivative data of the potential energy needed by the commutation
/// function, its gradients and the virial.
///
/// "Dilation" quantities are derivatives with respect to eps under the
/// uniform scaling q -> (1+eps) q of the model's natural coordinates
/// (pair separations for pair potentials, displacements from the well
/// centre for the harmonic well).
struct PotentialJet {
  double U = 0.0;
  std::vector<double> grad;           // dU/dq
  double laplacian = 0.0;             // sum of second derivatives
  double quad_pp = 0.0;               // p^T Hess p
  std::vector<double> hess_p;         // Hess p
  std::vector<double> hess_grad;      // Hess grad
  std::vector<double> grad_laplacian; // d(laplacian)/dq
  std::vector<double> third_pp;       // d(p^T Hess p)/dq at fixed p
  double dil_U = 0.0;
  std::vector<double> dil_grad;
  double dil_laplacian = 0.0;
  double dil_quad_pp = 0.0;
};

class SystemModel {
 public:
  SystemModel() = default;
  explicit SystemModel(ModelKind kind) : kind_(std::move(kind)) {}

  static SystemModel ideal_gas() { return SystemModel(IdealGas{}); }
  static SystemModel harmonic_well(double omega) { return SystemModel(HarmonicWell{omega}); }
  static SystemModel pair_potential(PairFunction f, double cutoff) { return SystemModel(PairPotential{f, cutoff}); }
  static SystemModel particle_in_box() { return SystemModel(ParticleInBox{}); }

  const ModelKind& kind() const { return kind_; }
  bool is_ideal() const { return std::holds_alternative<IdealGas>(kind_); }
  bool is_pair() const { return std::holds_alternative<PairPotential>(kind_); }
  bool is_box() const { return std::holds_alternative<ParticleInBox>(kind_); }
  bool is_noninteracting() const { return !is_pair(); }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, IdealGas>) return "ideal_gas";
          else if constexpr (std::is_same_v<K, HarmonicWell>) return "harmonic_well";
          else if constexpr (std::is_same_v<K, PairPotential>) return "pair_potential";
          else return "particle_in_box";
        },
        kind_);
  }

  /// Single-particle 1D eigenbasis, when the model has one. Multi-particle
  /// and multi-dimensional noninteracting systems use products of it.
  std::optional<Eigenbasis> eigenbasis(const ThermoState& s) const {
    if (auto* h = std::get_if<HarmonicWell>(&kind_)) return HarmonicBasis{s.mass, h->omega, s.hbar};
    if (is_box() && s.dimension == 1) return BoxBasis{s.mass, s.box_edge, s.hbar};
    return std::nullopt;
  }

  /// Potential energy. Returns +infinity for overlapping singular pairs.
  double potential(const PhaseConfig& c, const ThermoState& s) const {
    if (auto* h = std::get_if<HarmonicWell>(&kind_)) {
      double sum = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i)
        for (double x : c.position(i)) {
          double d = well_displacement(x, s);
          sum += d * d;
        }
      return 0.5 * s.mass * h->omega * h->omega * sum;
    }
    if (auto* pp = std::get_if<PairPotential>(&kind_)) {
      double sum = 0.0;
      const std::size_t n = c.size();
      for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) sum += pair_energy(*pp, c, i, j, s);
      return sum;
    }
    return 0.0;
  }

  /// Interaction energy of particle i with all others (pair models only).
  double particle_energy(const PhaseConfig& c, std::size_t i, const ThermoState& s) const {
    if (auto* h = std::get_if<HarmonicWell>(&kind_)) {
      double sum = 0.0;
      for (double x : c.position(i)) {
        double d = well_displacement(x, s);
        sum += d * d;
      }
      return 0.5 * s.mass * h->omega * h->omega * sum;
    }
    if (auto* pp = std::get_if<PairPotential>(&kind_)) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j)
        if (j != i) sum += pair_energy(*pp, c, i, j, s);
      return sum;
    }
    return 0.0;
  }

  /// Energy a particle at position q would have if inserted into c.
  double insertion_energy(const PhaseConfig& c, std::span<const double> q, const ThermoState& s) const {
    if (auto* h = std::get_if<HarmonicWell>(&kind_)) {
      double sum = 0.0;
      for (double x : q) {
        double d = well_displacement(x, s);
        sum += d * d;
      }
      return 0.5 * s.mass * h->omega * h->omega * sum;
    }
    if (auto* pp = std::get_if<PairPotential>(&kind_)) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        double r2 = 0.0;
        auto qj = c.position(j);
        for (int a = 0; a < c.dimension(); ++a) {
          double d = displacement(q[a], qj[a], s);
          r2 += d * d;
        }
        double r = std::sqrt(r2);
        if (r < pp->cutoff) sum += pp->pair.value(r);
      }
      return sum;
    }
    return 0.0;
  }

  std::vector<double> gradient(const PhaseConfig& c, const ThermoState& s) const {
    return jet(c, s, 1).grad;
  }

  /// Potential derivative data. order 0: U only; order 1: adds gradient and
  /// dilation of U; order 2: everything.
  PotentialJet jet(const PhaseConfig& c, const ThermoState& s, int order = 2) const {
    PotentialJet j;
    const std::size_t nd = c.positions().size();
    j.grad.assign(nd, 0.0);
    if (order >= 2) {
      j.hess_p.assign(nd, 0.0);
      j.hess_grad.assign(nd, 0.0);
      j.grad_laplacian.assign(nd, 0.0);
      j.third_pp.assign(nd, 0.0);
      j.dil_grad.assign(nd, 0.0);
    }
    if (auto* h = std::get_if<HarmonicWell>(&kind_)) {
      const double k = s.mass * h->omega * h->omega;
      double x2 = 0.0, p2 = 0.0;
      for (std::size_t a = 0; a < nd; ++a) {
        double x = well_displacement(c.positions()[a], s);
        x2 += x * x;
        j.grad[a] = k * x;
        if (order >= 2) {
          double p = c.momenta()[a];
          p2 += p * p;
          j.hess_p[a] = k * p;
          j.hess_grad[a] = k * k * x;
          j.dil_grad[a] = k * x;
        }
      }
      j.U = 0.5 * k * x2;
      j.dil_U = k * x2;
      if (order >= 2) {
        j.laplacian = k * static_cast<double>(nd);
        j.quad_pp = k * p2;
      }
      return j;
    }
    if (auto* pp = std::get_if<PairPotential>(&kind_)) {
      pair_jet(*pp, c, s, order, j);
      return j;
    }
    return j;  // ideal gas, box interior: U = 0
  }

 private:
  static double well_displacement(double x, const ThermoState& s) {
    return s.boundary == Boundary::Periodic ? minimum_image(x, s.box_edge) : x;
  }

  static double pair_energy(const PairPotential& pp, const PhaseConfig& c, std::size_t i, std::size_t j,
                            const ThermoState& s) {
    double r2 = 0.0;
    auto qi = c.position(i);
    auto qj = c.position(j);
    for (int a = 0; a < c.dimension(); ++a) {
      double d = displacement(qi[a], qj[a], s);
      r2 += d * d;
    }
    double r = std::sqrt(r2);
    return r < pp.cutoff ? pp.pair.value(r) : 0.0;
  }

  static void pair_jet(const PairPotential& pp, const PhaseConfig& c, const ThermoState& s, int order,
                       PotentialJet& j) {
    const int d = c.dimension();
    const std::size_t n = c.size();
    struct PairTerm {
      std::size_t i, k;
      double r;
      double nvec[3];
      std::array<double, 4> f;
    };
    std::vector<PairTerm> terms;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        PairTerm t{i, k, 0.0, {0, 0, 0}, {}};
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          t.nvec[a] = displacement(c.position(i)[a], c.position(k)[a], s);
          r2 += t.nvec[a] * t.nvec[a];
        }
        t.r = std::sqrt(r2);
        if (t.r >= pp.cutoff) continue;
        for (int a = 0; a < d; ++a) t.nvec[a] /= t.r;
        t.f = pp.pair.derivatives(t.r);
        terms.push_back(t);
      }
    }
    for (const auto& t : terms) {
      j.U += t.f[0];
      j.dil_U += t.r * t.f[1];
      for (int a = 0; a < d; ++a) {
        j.grad[t.i * d + a] += t.f[1] * t.nvec[a];
        j.grad[t.k * d + a] -= t.f[1] * t.nvec[a];
      }
    }
    if (order < 2) return;

    const auto& p = c.momenta();
    // Hess_pair v = f'' n (n.v) + (f'/r)(v - n (n.v))
    auto hess_apply = [d](const PairTerm& t, const double* v, double* out) {
      double nv = 0.0;
      for (int a = 0; a < d; ++a) nv += t.nvec[a] * v[a];
      for (int a = 0; a < d; ++a)
        out[a] = t.f[2] * t.nvec[a] * nv + (t.f[1] / t.r) * (v[a] - t.nvec[a] * nv);
    };
    // Third-derivative contraction T[v,v].
    auto third_apply = [d](const PairTerm& t, const double* v, double* out) {
      double s1 = 0.0, v2 = 0.0;
      for (int a = 0; a < d; ++a) {
        s1 += t.nvec[a] * v[a];
        v2 += v[a] * v[a];
      }
      const double g = t.f[1] / t.r;
      const double gprime = (t.f[2] - g) / t.r;
      for (int a = 0; a < d; ++a)
        out[a] = t.nvec[a] * (t.f[3] * s1 * s1 + gprime * (v2 - s1 * s1)) +
                 (v[a] - s1 * t.nvec[a]) * 2.0 * s1 * (t.f[2] - g) / t.r;
    };

    const double dm1 = d - 1;
    for (const auto& t : terms) {
      double v[3], gv[3], hv[3], hg[3], tv[3];
      for (int a = 0; a < d; ++a) {
        v[a] = p[t.i * d + a] - p[t.k * d + a];
        gv[a] = j.grad[t.i * d + a] - j.grad[t.k * d + a];
      }
      hess_apply(t, v, hv);
      hess_apply(t, gv, hg);
      third_apply(t, v, tv);
      const double lap = t.f[2] + dm1 * t.f[1] / t.r;
      const double lap_prime = t.f[3] + dm1 * (t.f[2] / t.r - t.f[1] / (t.r * t.r));
      j.laplacian += 2.0 * lap;
      j.dil_laplacian += 2.0 * lap_prime * t.r;
      double qv = 0.0, tr = 0.0;
      for (int a = 0; a < d; ++a) {
        qv += v[a] * hv[a];
        tr += tv[a] * t.nvec[a] * t.r;
        j.hess_p[t.i * d + a] += hv[a];
        j.hess_p[t.k * d + a] -= hv[a];
        j.hess_grad[t.i * d + a] += hg[a];
        j.hess_grad[t.k * d + a] -= hg[a];
        j.third_pp[t.i * d + a] += tv[a];
        j.third_pp[t.k * d + a] -= tv[a];
        j.grad_laplacian[t.i * d + a] += 2.0 * lap_prime * t.nvec[a];
        j.grad_laplacian[t.k * d + a] -= 2.0 * lap_prime * t.nvec[a];
        // Hess r = f'' r n
        j.dil_grad[t.i * d + a] += t.f[2] * t.r * t.nvec[a];
        j.dil_grad[t.k * d + a] -= t.f[2] * t.r * t.nvec[a];
      }
      j.quad_pp += qv;
      j.dil_quad_pp += tr;
    }
  }

  ModelKind kind_ = IdealGas{};
};

/// H = K(p) + U(q). Infinite for singular overlaps, which samplers treat as
/// a rejection.
inline double hamiltonian(const PhaseConfig& c, const SystemModel& m, const ThermoState& s) {
  if (c.empty()) return 0.0;
  return kinetic_energy(c, s) + m.potential(c, s);
}

}  // namespace qps

#endif  // QPS_CORE_HPP
