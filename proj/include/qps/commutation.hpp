// Commutation function W_p(p, q), defined by
//
//   e^{-beta H} W_p = <q| e^{-beta H^} |p> / <q|p>,
//
// in three forms: classical (W = 1), Wigner-Kirkwood to second order in
// hbar, and the exact eigenfunction series for noninteracting models.
//
// Wigner-Kirkwood terms, with A = p.grad U, B = lap U, C = |grad U|^2,
// D = p^T Hess(U) p:
//
//   W  = 1 + hbar w1 + hbar^2 w2
//   w1 = -i beta^2 A / (2m)
//   w2 = -beta^2 B/(4m) + beta^3 C/(6m) + beta^3 D/(6m^2) - beta^4 A^2/(8m^2)

#ifndef QPS_COMMUTATION_HPP
#define QPS_COMMUTATION_HPP

#include "qps/core.hpp"

namespace qps {

struct Classical {};
struct WignerKirkwood {
  int order = 2;
};
struct EigenSeries {
  int n_max = 4096;
  double tail_tol = 1e-12;
};

using CommutationSpec = std::variant<Classical, WignerKirkwood, EigenSeries>;

inline std::string spec_name(const CommutationSpec& spec) {
  if (std::holds_alternative<Classical>(spec)) return "classical";
  if (auto* wk = std::get_if<WignerKirkwood>(&spec)) return "wigner_kirkwood_" + std::to_string(wk->order);
  return "eigen_series";
}

inline bool is_classical(const CommutationSpec& spec) { return std::holds_alternative<Classical>(spec); }

/// W, its beta derivative and (optionally) its phase-space gradients at one
/// point. `dilation` is q.grad_q W - p.grad_p W with q measured in the
/// model's natural coordinates.
struct CommutationJet {
  Complex W{1.0, 0.0};
  Complex dW_dbeta{};
  std::vector<Complex> grad_q;
  std::vector<Complex> grad_p;
  Complex dilation{};
};

// ---------------------------------------------------------------------------
// Eigenfunction series for one Cartesian degree of freedom.

namespace detail {

/// One-axis basis used by the product form; the box uses [0, L] per axis.
inline std::optional<Eigenbasis> axis_basis(const SystemModel& m, const ThermoState& s) {
  if (auto* h = std::get_if<HarmonicWell>(&m.kind())) return HarmonicBasis{s.mass, h->omega, s.hbar};
  if (m.is_box()) return BoxBasis{s.mass, s.box_edge, s.hbar};
  return std::nullopt;
}

inline double basis_energy(const Eigenbasis& b, int n) {
  return std::visit([n](const auto& x) { return x.energy(n); }, b);
}

}  // namespace detail

/// Number of series terms so that e^{-beta (E_n - E_0)} < tail_tol; for the
/// oscillator also large enough that the basis reaches the classical
/// turning point of the arguments. Throws NumericalError when more than n_max terms are needed.
inline int eigen_terms(const Eigenbasis& b, double beta, const EigenSeries& spec, double q = 0.0, double p = 0.0) {
  const double target = std::log(1.0 / spec.tail_tol) / beta;
  const double e0 = detail::basis_energy(b, 0);
  double n_needed;
  if (auto* h = std::get_if<HarmonicBasis>(&b)) {
    n_needed = std::ceil(target / (h->hbar * h->omega)) + 1.0;
    const double x0 = h->length_scale();
    const double xi_q = q / x0, xi_p = p * x0 / h->hbar;
    n_needed = std::max(n_needed, std::ceil(0.5 * (xi_q * xi_q + xi_p * xi_p)) + 8.0);
  } else {
    const double unit = e0;  // E_k = unit (k+1)^2
    n_needed = std::ceil(std::sqrt(1.0 + target / unit)) + 1.0;
  }
  if (!(n_needed <= spec.n_max))
    throw NumericalError("EigenSeries: truncation tolerance needs " + std::to_string(n_needed) +
                         " terms, above n_max = " + std::to_string(spec.n_max));
  return static_cast<int>(n_needed);
}

/// Weighted single-axis series at (q, p):
///   S   = e^{-ipq/hbar} sum_n e^{-beta E_n} phi_n(q) phi~_n(p)   (= e^{-beta H} W)
///   S_E = same series weighted by E_n                          (= -dS/dbeta)
/// and, when requested, dS/dq and dS/dp.
struct AxisSeries {
  Complex S{}, S_E{}, dS_dq{}, dS_dp{};
};

inline AxisSeries axis_series(const Eigenbasis& b, double q, double p, double beta, const EigenSeries& spec,
                              bool gradients) {
  const int n = eigen_terms(b, beta, spec, q, p);
  std::vector<double> phi(n), dphi;
  std::vector<Complex> amp(n), damp;
  double hbar;
  if (auto* h = std::get_if<HarmonicBasis>(&b)) {
    hbar = h->hbar;
    if (gradients) {
      dphi.resize(n);
      damp.resize(n);
    }
    h->wavefunctions(q, phi, dphi);
    h->momentum_amplitudes(p, amp, damp);
  } else {
    const auto& bx = std::get<BoxBasis>(b);
    if (gradients) throw std::invalid_argument("w_gradients: box eigenbasis has no derivative data");
    hbar = bx.hbar;
    bx.wavefunctions(q, phi);
    bx.momentum_amplitudes(p, amp);
  }
  const double e0 = detail::basis_energy(b, 0);
  Complex sum{}, sum_e{}, sum_dq{}, sum_dp{};
  for (int k = 0; k < n; ++k) {
    const double e = detail::basis_energy(b, k);
    const double w = std::exp(-beta * (e - e0));
    sum += w * phi[k] * amp[k];
    sum_e += w * e * phi[k] * amp[k];
    if (gradients) {
      sum_dq += w * dphi[k] * amp[k];
      sum_dp += w * phi[k] * damp[k];
    }
  }
  const double scale = std::exp(-beta * e0);
  const Complex phase = std::exp(Complex(0.0, -p * q / hbar));
  AxisSeries out;
  out.S = scale * phase * sum;
  out.S_E = scale * phase * sum_e;
  if (gradients) {
    out.dS_dq = Complex(0.0, -p / hbar) * out.S + scale * phase * sum_dq;
    out.dS_dp = Complex(0.0, -q / hbar) * out.S + scale * phase * sum_dp;
  }
  return out;
}

/// e^{-beta H} W and e^{-beta H} dW/dbeta for noninteracting product models,
/// evaluated without forming e^{+beta H}. Used by the quadrature oracle.
struct WeightedW {
  Complex S{};         // e^{-beta H} W
  Complex S_E{};       // -d(e^{-beta H} W)/dbeta
  Complex S_dbeta{};   // e^{-beta H} dW/dbeta = H S - S_E
};

namespace detail {

inline double axis_coordinate(const SystemModel& m, double x, const ThermoState& s) {
  if (std::holds_alternative<HarmonicWell>(m.kind()) && s.boundary == Boundary::Periodic)
    return minimum_image(x, s.box_edge);
  return x;
}

inline void require_eigen_model(const SystemModel& m) {
  if (m.is_pair()) throw std::invalid_argument("EigenSeries: model has no eigenbasis (interacting)");
}

}  // namespace detail

inline WeightedW weighted_commutation(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                      const EigenSeries& spec) {
  detail::require_eigen_model(m);
  WeightedW out;
  const double H = hamiltonian(c, m, s);
  auto basis = detail::axis_basis(m, s);
  if (!basis) {  // plane waves are exact eigenstates: W = 1
    out.S = std::exp(-s.beta * H);
    out.S_E = H * out.S;
    out.S_dbeta = {};
    return out;
  }
  const auto& q = c.positions();
  const auto& p = c.momenta();
  Complex prod{1.0, 0.0};
  std::vector<AxisSeries> ax(q.size());
  for (std::size_t f = 0; f < q.size(); ++f) {
    ax[f] = axis_series(*basis, detail::axis_coordinate(m, q[f], s), p[f], s.beta, spec, false);
    prod *= ax[f].S;
  }
  Complex se{};
  for (std::size_t f = 0; f < q.size(); ++f) {
    Complex others{1.0, 0.0};
    for (std::size_t g = 0; g < q.size(); ++g)
      if (g != f) others *= ax[g].S;
    se += ax[f].S_E * others;
  }
  out.S = prod;
  out.S_E = se;
  out.S_dbeta = H * prod - se;
  return out;
}

// ---------------------------------------------------------------------------
// Full jet.

namespace detail {

inline CommutationJet wk_jet(const PhaseConfig& c, const SystemModel& m, const ThermoState& s, int order,
                             bool gradients) {
  if (order != 1 && order != 2) throw std::invalid_argument("WignerKirkwood: order must be 1 or 2");
  CommutationJet out;
  const std::size_t nd = c.positions().size();
  if (gradients) {
    out.grad_q.assign(nd, Complex{});
    out.grad_p.assign(nd, Complex{});
  }
  if (m.is_ideal() || m.is_box() || c.empty()) return out;

  const PotentialJet j = m.jet(c, s, 2);
  const auto& p = c.momenta();
  const double b = s.beta, mass = s.mass, hb = s.hbar;
  const Complex I(0.0, 1.0);
  double A = 0.0, C = 0.0, dA = 0.0, dC = 0.0;
  for (std::size_t a = 0; a < nd; ++a) {
    A += p[a] * j.grad[a];
    C += j.grad[a] * j.grad[a];
    dA += p[a] * j.dil_grad[a];
    dC += 2.0 * j.grad[a] * j.dil_grad[a];
  }
  const double B = j.laplacian, D = j.quad_pp;

  const Complex w1 = -I * b * b * A / (2.0 * mass);
  const Complex dw1 = -I * b * A / mass;
  out.W = 1.0 + hb * w1;
  out.dW_dbeta = hb * dw1;
  Complex dil = hb * (-I * b * b / (2.0 * mass)) * (dA - A);

  const double m2 = mass * mass;
  if (order == 2) {
    const double w2 = -b * b * B / (4.0 * mass) + b * b * b * C / (6.0 * mass) + b * b * b * D / (6.0 * m2) -
                      b * b * b * b * A * A / (8.0 * m2);
    const double dw2 = -b * B / (2.0 * mass) + b * b * C / (2.0 * mass) + b * b * D / (2.0 * m2) -
                       b * b * b * A * A / (2.0 * m2);
    out.W += hb * hb * w2;
    out.dW_dbeta += hb * hb * dw2;
    // p.grad_p: A -> A, D -> 2D; B and C do not depend on p.
    const double dil_w2 = -b * b * j.dil_laplacian / (4.0 * mass) + b * b * b * dC / (6.0 * mass) +
                          b * b * b * j.dil_quad_pp / (6.0 * m2) - b * b * b * b * 2.0 * A * dA / (8.0 * m2);
    const double pgp_w2 = b * b * b * 2.0 * D / (6.0 * m2) - b * b * b * b * 2.0 * A * A / (8.0 * m2);
    dil += hb * hb * (dil_w2 - pgp_w2);
  }
  out.dilation = dil;

  if (gradients) {
    for (std::size_t a = 0; a < nd; ++a) {
      out.grad_q[a] = hb * (-I * b * b / (2.0 * mass)) * j.hess_p[a];
      out.grad_p[a] = hb * (-I * b * b / (2.0 * mass)) * j.grad[a];
      if (order == 2) {
        out.grad_q[a] += hb * hb *
                         (-b * b / (4.0 * mass) * j.grad_laplacian[a] + b * b * b / (6.0 * mass) * 2.0 * j.hess_grad[a] +
                          b * b * b / (6.0 * m2) * j.third_pp[a] - b * b * b * b / (8.0 * m2) * 2.0 * A * j.hess_p[a]);
        out.grad_p[a] += hb * hb *
                         (b * b * b / (6.0 * m2) * 2.0 * j.hess_p[a] - b * b * b * b / (8.0 * m2) * 2.0 * A * j.grad[a]);
      }
    }
  }
  return out;
}

inline CommutationJet eigen_jet(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                const EigenSeries& spec, bool gradients) {
  detail::require_eigen_model(m);
  CommutationJet out;
  const std::size_t nd = c.positions().size();
  if (gradients) {
    out.grad_q.assign(nd, Complex{});
    out.grad_p.assign(nd, Complex{});
  }
  auto basis = axis_basis(m, s);
  if (!basis || c.empty()) return out;

  const auto& q = c.positions();
  const auto& p = c.momenta();
  const bool harmonic = std::holds_alternative<HarmonicBasis>(*basis);
  const double omega2 = harmonic ? std::get<HarmonicWell>(m.kind()).omega * std::get<HarmonicWell>(m.kind()).omega : 0.0;

  // Per-axis W_f = S_f e^{beta H_f}; the product over axes is W.
  Complex W{1.0, 0.0}, dW{};
  std::vector<Complex> wf(nd), dwf(nd), gq(nd), gp(nd);
  for (std::size_t f = 0; f < nd; ++f) {
    const double x = axis_coordinate(m, q[f], s);
    const double hf = p[f] * p[f] / (2.0 * s.mass) + 0.5 * s.mass * omega2 * x * x;
    const AxisSeries a = axis_series(*basis, x, p[f], s.beta, spec, gradients);
    const double boltz_inv = std::exp(s.beta * hf);
    wf[f] = a.S * boltz_inv;
    // d/dbeta (S e^{beta h}) = (-S_E + h S) e^{beta h}
    dwf[f] = (hf * a.S - a.S_E) * boltz_inv;
    if (gradients) {
      gq[f] = (a.dS_dq + s.beta * s.mass * omega2 * x * a.S) * boltz_inv;
      gp[f] = (a.dS_dp + s.beta * p[f] / s.mass * a.S) * boltz_inv;
    }
  }
  for (std::size_t f = 0; f < nd; ++f) W *= wf[f];
  for (std::size_t f = 0; f < nd; ++f) {
    Complex others{1.0, 0.0};
    for (std::size_t g = 0; g < nd; ++g)
      if (g != f) others *= wf[g];
    dW += dwf[f] * others;
    if (gradients) {
      out.grad_q[f] = gq[f] * others;
      out.grad_p[f] = gp[f] * others;
      out.dilation += axis_coordinate(m, q[f], s) * out.grad_q[f] - p[f] * out.grad_p[f];
    }
  }
  out.W = W;
  out.dW_dbeta = dW;
  return out;
}

}  // namespace detail

/// Evaluates W, dW/dbeta and, if requested, the gradients of W.
inline CommutationJet commutation_jet(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                      const CommutationSpec& spec, bool gradients = false) {
  if (auto* wk = std::get_if<WignerKirkwood>(&spec)) return detail::wk_jet(c, m, s, wk->order, gradients);
  if (auto* es = std::get_if<EigenSeries>(&spec)) return detail::eigen_jet(c, m, s, *es, gradients);
  CommutationJet out;
  if (gradients) {
    out.grad_q.assign(c.positions().size(), Complex{});
    out.grad_p.assign(c.positions().size(), Complex{});
  }
  return out;
}

inline ComplexWeight w_value(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                             const CommutationSpec& spec) {
  return commutation_jet(c, m, s, spec).W;
}

inline ComplexWeight w_beta_derivative(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                       const CommutationSpec& spec) {
  return commutation_jet(c, m, s, spec).dW_dbeta;
}

/// W_H = W - H^{-1} dW/dbeta. Throws NumericalError at H = 0.
inline ComplexWeight w_hamiltonian_variant(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                           const CommutationSpec& spec) {
  const double H = hamiltonian(c, m, s);
  const auto jet = commutation_jet(c, m, s, spec);
  if (is_classical(spec)) return jet.W;
  if (H == 0.0) throw NumericalError("w_hamiltonian_variant: H = 0 at this phase point");
  return jet.W - jet.dW_dbeta / H;
}

/// Gradients of e^{-beta H} W with respect to q and p.
struct WeightGradients {
  std::vector<Complex> grad_q;
  std::vector<Complex> grad_p;
};

inline WeightGradients w_gradients(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                   const CommutationSpec& spec) {
  const auto jet = commutation_jet(c, m, s, spec, true);
  const PotentialJet pj = m.jet(c, s, 1);
  const double boltz = std::exp(-s.beta * hamiltonian(c, m, s));
  WeightGradients out;
  const std::size_t nd = c.positions().size();
  out.grad_q.resize(nd);
  out.grad_p.resize(nd);
  for (std::size_t a = 0; a < nd; ++a) {
    out.grad_q[a] = boltz * (jet.grad_q[a] - s.beta * pj.grad[a] * jet.W);
    out.grad_p[a] = boltz * (jet.grad_p[a] - s.beta * c.momenta()[a] / s.mass * jet.W);
  }
  return out;
}

}  // namespace qps

#endif  // QPS_COMMUTATION_HPP
