// Phase-space virial and pressure.
//
// The virial V_p is defined through
//
//   e^{-bH} W V_p = q.grad_q(e^{-bH} W) - p.grad_p(e^{-bH} W)
//                 = e^{-bH} W (-b q.grad U + b p^2/m) + e^{-bH}(q.grad_q W - p.grad_p W),
//
// with q.grad taken over the model's natural coordinates (pair separations,
// displacements from the well centre). The pressure follows from
//
//   d V beta p = <V_p>_{W,1} + sum_l <dV_p d eta-dot^(l)>_{W,1}.

#ifndef QPS_VIRIAL_HPP
#define QPS_VIRIAL_HPP

#include "qps/estimators.hpp"
#include "qps/oracle.hpp"

namespace qps {

struct VirialParts {
  double kinetic = 0.0;    // beta p^2 / m
  double potential = 0.0;  // -beta q.grad U
  Complex gradient{};      // (q.grad_q W - p.grad_p W) / W
  Complex total() const { return kinetic + potential + gradient; }
};

inline VirialParts virial_parts(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                const CommutationSpec& spec) {
  VirialParts v;
  v.kinetic = s.beta * 2.0 * kinetic_energy(c, s);
  v.potential = -s.beta * m.jet(c, s, 1).dil_U;
  if (!is_classical(spec)) {
    const auto jet = commutation_jet(c, m, s, spec, true);
    if (jet.W == Complex{}) throw NumericalError("virial_phase_function: W vanishes at this phase point");
    v.gradient = jet.dilation / jet.W;
  }
  return v;
}

inline ComplexWeight virial_phase_function(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                           const CommutationSpec& spec) {
  return virial_parts(c, m, s, spec).total();
}

/// Contributions to beta p, each already divided by d V.
struct VirialBreakdown {
  Estimate kinetic;
  Estimate potential;
  Estimate gradient;
  std::vector<Estimate> loops;  // index l - 2
  Estimate total;
};

/// beta p with its breakdown. Requires measurements taken with virial = true.
inline VirialBreakdown pressure(const Measurements& meas) {
  if (!meas.options().virial) throw std::invalid_argument("pressure: measurements lack virial channels");
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  const auto& lay = meas.layout();
  const auto& acc = meas.accumulator();
  const double scale = 1.0 / (meas.state().dimension * meas.state().volume());
  auto part = [&](std::size_t k) {
    return acc.jackknife([&](std::span<const Complex> m) { return scale * cdiv(m[k], m[ChannelLayout::W]); });
  };
  auto loop_term = [&](std::span<const Complex> m, std::size_t l) {
    const Complex w = m[ChannelLayout::W];
    const Complex v = cdiv(m[ChannelLayout::VKinW] + m[ChannelLayout::VPotW] + m[ChannelLayout::VGradW], w);
    return scale * (cdiv(m[lay.loop(l, ChannelLayout::VEta)], w) - v * cdiv(m[lay.loop(l, ChannelLayout::Eta)], w));
  };
  VirialBreakdown b;
  b.kinetic = part(ChannelLayout::VKinW);
  b.potential = part(ChannelLayout::VPotW);
  b.gradient = part(ChannelLayout::VGradW);
  for (std::size_t l = 2; l <= lay.l_max; ++l)
    b.loops.push_back(acc.jackknife([&](std::span<const Complex> m) { return loop_term(m, l); }));
  b.total = acc.jackknife([&](std::span<const Complex> m) {
    const Complex w = m[ChannelLayout::W];
    Complex t = scale * cdiv(m[ChannelLayout::VKinW], w) + scale * cdiv(m[ChannelLayout::VPotW], w) +
                scale * cdiv(m[ChannelLayout::VGradW], w);
    for (std::size_t l = 2; l <= lay.l_max; ++l) t += loop_term(m, l);
    return t;
  });
  return b;
}

struct ScalingReport {
  double dimer_change = 0.0;   // max relative change of a dimer factor
  double trimer_change = 0.0;  // same for 3-loops
  double box_pressure = 0.0;   // beta p from the L-difference quotient of ln Z
  double box_exact = 0.0;
  bool pass = false;
};

/// Loop factors are invariant under q -> (1+e) q, p -> p/(1+e); checked on
/// random configurations. The pressure of a particle in a 1D box from the
/// difference quotient of ln Z(L) by quadrature is compared with the exact
/// eigenvalue sum.
inline ScalingReport scaled_coordinate_check(const ThermoState& s, double eps = 1e-4, int trials = 200,
                                             std::uint64_t seed = 11) {
  ScalingReport r;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  ThermoState open = s;
  open.boundary = Boundary::Open;
  for (int t = 0; t < trials; ++t) {
    PhaseConfig c(s.dimension);
    for (int i = 0; i < 3; ++i) {
      std::vector<double> q(s.dimension), p(s.dimension);
      for (auto& x : q) x = u(rng);
      for (auto& x : p) x = u(rng);
      c.add_particle(q, p);
    }
    PhaseConfig scaled = c;
    for (double& q : scaled.positions()) q *= 1 + eps;
    for (double& p : scaled.momenta()) p /= 1 + eps;
    const Complex d0 = dimer_factor(c, 0, 1, open), d1 = dimer_factor(scaled, 0, 1, open);
    const Complex t0 = loop_factor(c, LoopIndex{{0, 1, 2}}, open), t1 = loop_factor(scaled, LoopIndex{{0, 1, 2}}, open);
    r.dimer_change = std::max(r.dimer_change, std::abs(d1 - d0) / std::abs(d0));
    r.trimer_change = std::max(r.trimer_change, std::abs(t1 - t0) / std::abs(t0));
  }
  ThermoState box = s.with_beta(s.beta);
  box.dimension = 1;
  box.boundary = Boundary::Open;
  box.statistics = Statistics::Boltzmann;
  const double L = box.box_edge, h = 1e-3 * L;
  auto lnz = [&](double edge) {
    ThermoState t = box;
    t.box_edge = edge;
    return std::log(quadrature_partition(SystemModel::particle_in_box(), t, EigenSeries{}, 1, false).value);
  };
  r.box_pressure = (lnz(L + h) - lnz(L - h)) / (2 * h);
  r.box_exact = box_exact_pressure(box, L);
  r.pass = r.dimer_change < 1e-7 && r.trimer_change < 1e-7 &&
           std::abs(r.box_pressure - r.box_exact) < 1e-5 * std::abs(r.box_exact);
  return r;
}

}  // namespace qps

#endif  // QPS_VIRIAL_HPP
