// Ratio estimators over the classical grand-canonical measure.
//
// For a sample Gamma drawn from exp(-beta H), the monomer average of A is
//
//   <A>_{W,1} = E[A W] / E[W],
//
// and loop corrections are covariances with the single-loop sums eta-dot^(l).
// Every sample is reduced to a fixed set of complex channels which feed one
// mergeable Accumulator; all observables below are smooth functions of the
// channel means, with jackknife errors.
//
// Energy integrands use the identity e^{-bH} H W_H = e^{-bH}(H W - dW/db), so
// the W_H kernel never divides by H.

#ifndef QPS_ESTIMATORS_HPP
#define QPS_ESTIMATORS_HPP

#include <array>
#include <functional>
#include <optional>

#include "qps/accumulator.hpp"
#include "qps/commutation.hpp"
#include "qps/sampler.hpp"
#include "qps/symmetrization.hpp"

namespace qps {

struct MeasureOptions {
  CommutationSpec spec = Classical{};
  std::size_t l_max = 1;     // loops of order 2..l_max are measured
  double f_cut = 1.5;        // loop neighbour cutoff in units of Lambda
  bool virial = false;       // also measure the phase-space virial
  std::size_t block_size = 100;
  int momentum_draws = 1;    // momentum redraws averaged per position sample
  std::uint64_t momentum_seed = 17;

  void validate() const {
    if (l_max > 1 && !(f_cut > 0)) throw std::invalid_argument("MeasureOptions.f_cut must be positive");
    if (block_size == 0) throw std::invalid_argument("MeasureOptions.block_size must be positive");
    if (momentum_draws < 1) throw std::invalid_argument("MeasureOptions.momentum_draws must be at least 1");
  }
};

/// Channel indices. Per-loop channels follow the base block, kLoopStride
/// per order starting at l = 2.
struct ChannelLayout {
  enum Base : std::size_t { W, HW, HWH, H2, DW, AbsW, NW, KW, UW, VKinW, VPotW, VGradW, kBase };
  enum Loop : std::size_t { Eta, HEta, HWHEta, H2Eta, UEta, VEta, kLoopStride };

  std::size_t l_max = 1;

  std::size_t size() const { return kBase + loops() * kLoopStride; }
  std::size_t loops() const { return l_max >= 2 ? l_max - 1 : 0; }
  std::size_t loop(std::size_t l, Loop k) const {
    if (l < 2 || l > l_max) throw std::out_of_range("ChannelLayout: loop order outside 2..l_max");
    return kBase + (l - 2) * kLoopStride + k;
  }
};

/// Channel values of one phase point. A loop list built for the same
/// positions may be passed to skip graph construction.
inline std::vector<Complex> measure_sample(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                           const MeasureOptions& opt, const LoopList* loops = nullptr) {
  const ChannelLayout lay{opt.l_max};
  std::vector<Complex> x(lay.size(), Complex{});
  const double K = kinetic_energy(c, s);
  const auto pot = m.jet(c, s, opt.virial ? 1 : 0);
  const double U = pot.U;
  const double H = K + U;
  const auto jet = commutation_jet(c, m, s, opt.spec, opt.virial);
  const Complex W = jet.W, dW = jet.dW_dbeta;
  const double N = static_cast<double>(c.size());

  x[ChannelLayout::W] = W;
  x[ChannelLayout::HW] = H * W;
  x[ChannelLayout::HWH] = H * W - dW;
  x[ChannelLayout::H2] = H * H * W - H * dW;
  x[ChannelLayout::DW] = dW;
  x[ChannelLayout::AbsW] = std::abs(W);
  x[ChannelLayout::NW] = N * W;
  x[ChannelLayout::KW] = K * W;
  x[ChannelLayout::UW] = U * W;
  Complex vir{};
  if (opt.virial) {
    if (W == Complex{}) throw NumericalError("measure_sample: W vanishes, virial undefined");
    x[ChannelLayout::VKinW] = s.beta * 2.0 * K * W;  // beta p^2 / m
    x[ChannelLayout::VPotW] = -s.beta * pot.dil_U * W;
    x[ChannelLayout::VGradW] = jet.dilation;
    vir = x[ChannelLayout::VKinW] + x[ChannelLayout::VPotW] + x[ChannelLayout::VGradW];
  }
  if (lay.loops() > 0 && c.size() >= 2 && exchange_sign(s.statistics) != 0) {
    const auto eta = loops ? evaluate_loop_sums(c, s, *loops)
                           : single_loop_sums(c, s, opt.l_max, build_neighbor_graph(c, s, opt.f_cut));
    for (std::size_t l = 2; l <= opt.l_max; ++l) {
      const Complex e = eta[l];
      x[lay.loop(l, ChannelLayout::Eta)] = e * W;
      x[lay.loop(l, ChannelLayout::HEta)] = e * H * W;
      x[lay.loop(l, ChannelLayout::HWHEta)] = e * (H * W - dW);
      x[lay.loop(l, ChannelLayout::H2Eta)] = e * (H * H * W - H * dW);
      x[lay.loop(l, ChannelLayout::UEta)] = e * U * W;
      x[lay.loop(l, ChannelLayout::VEta)] = e * vir;
    }
  }
  return x;
}

/// Channels averaged over the sample's own momenta and momentum_draws - 1
/// fresh Maxwell draws at fixed positions.
inline std::vector<Complex> measure_averaged(const PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                             const MeasureOptions& opt, Rng& rng) {
  if (opt.momentum_draws <= 1) return measure_sample(c, m, s, opt);
  std::optional<LoopList> loops;
  if (opt.l_max >= 2 && c.size() >= 2 && exchange_sign(s.statistics) != 0)
    loops = enumerate_loops(build_neighbor_graph(c, s, opt.f_cut), opt.l_max);
  const LoopList* lp = loops ? &*loops : nullptr;
  auto x = measure_sample(c, m, s, opt, lp);
  PhaseConfig work = c;
  for (int k = 1; k < opt.momentum_draws; ++k) {
    redraw_momenta(work, s, rng);
    const auto y = measure_sample(work, m, s, opt, lp);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  }
  for (auto& v : x) v /= static_cast<double>(opt.momentum_draws);
  return x;
}

/// Mergeable accumulator of all estimator channels for one (model, state).
class Measurements {
 public:
  Measurements(const SystemModel& m, const ThermoState& s, const MeasureOptions& opt)
      : model_(m), state_(s), opt_(opt), layout_{opt.l_max}, acc_(layout_.size(), opt.block_size),
        rng_(opt.momentum_seed) {
    opt_.validate();
  }

  void add(const PhaseConfig& c) { acc_.add(measure_averaged(c, model_, state_, opt_, rng_)); }
  void add(const SampleRecord& r) { add(r.config); }
  void merge(const Measurements& o) { acc_.merge(o.acc_); }

  const Accumulator& accumulator() const { return acc_; }
  const ChannelLayout& layout() const { return layout_; }
  const MeasureOptions& options() const { return opt_; }
  const ThermoState& state() const { return state_; }
  const SystemModel& model() const { return model_; }
  long count() const { return acc_.count(); }

 private:
  SystemModel model_;
  ThermoState state_;
  MeasureOptions opt_;
  ChannelLayout layout_;
  Accumulator acc_;
  Rng rng_;
};

inline Measurements measure_stream(const std::vector<SampleRecord>& stream, const SystemModel& m,
                                   const ThermoState& s, const MeasureOptions& opt) {
  Measurements meas(m, s, opt);
  for (const auto& r : stream) meas.add(r);
  return meas;
}

namespace detail {

/// Rejects empty streams and denominators statistically consistent with zero.
inline void require_denominator(const Accumulator& acc, std::size_t den) {
  if (acc.empty()) throw std::invalid_argument("estimator: empty stream");
  const Estimate d = acc.mean(den);
  const double err = std::hypot(d.error, d.error_imag);
  if (std::abs(d.value) == 0.0 || (std::isfinite(err) && std::abs(d.value) < 3.0 * err))
    throw NumericalError("estimator: reweighting denominator consistent with zero");
}

inline std::vector<Complex> conj_all(std::span<const Complex> m) {
  std::vector<Complex> out(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) out[k] = std::conj(m[k]);
  return out;
}

}  // namespace detail

/// <A>_{W,1} for a user observable, E[A W] / E[W] over the stream.
inline Estimate monomer_average(const std::function<double(const SampleRecord&)>& observable,
                                const std::vector<SampleRecord>& stream, const SystemModel& m, const ThermoState& s,
                                const CommutationSpec& spec, std::size_t block_size = 100) {
  Accumulator acc(2, block_size);
  for (const auto& r : stream) {
    const Complex W = w_value(r.config, m, s, spec);
    const Complex x[2] = {W, observable(r) * W};
    acc.add(x);
  }
  detail::require_denominator(acc, 0);
  return acc.ratio(1, 0);
}

/// Monomer average of a base channel.
inline Estimate monomer_average(const Measurements& meas, ChannelLayout::Base channel) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  return meas.accumulator().ratio(channel, ChannelLayout::W);
}

/// -beta Omega^(l) = <eta-dot^(l)>_{W,1}.
inline Estimate loop_grand_potential(const Measurements& meas, std::size_t l) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  return meas.accumulator().ratio(meas.layout().loop(l, ChannelLayout::Eta), ChannelLayout::W);
}

/// ln Xi_1 where it is known in closed form: the ideal gas, and the
/// noninteracting oscillator with classical or exact W.
inline std::optional<double> analytic_monomer_log_xi(const SystemModel& m, const ThermoState& s,
                                                     const CommutationSpec& spec) {
  if (m.is_ideal()) return s.fugacity * s.volume() / std::pow(thermal_wavelength(s), s.dimension);
  if (auto* h = std::get_if<HarmonicWell>(&m.kind())) {
    const double t = s.beta * s.hbar * h->omega;
    if (is_classical(spec)) return s.fugacity * std::pow(1.0 / t, s.dimension);
    if (std::holds_alternative<EigenSeries>(spec))
      return s.fugacity * std::pow(1.0 / (2.0 * std::sinh(0.5 * t)), s.dimension);
  }
  return std::nullopt;
}

struct GrandPotential {
  Estimate total;              // -beta Omega, or the loop part alone when !monomer_known
  bool monomer_known = false;
  double monomer = 0.0;        // ln Xi_1
  std::vector<Estimate> loops; // index l - 2
};

/// -beta Omega = ln Xi_1 + sum_{l=2}^{l_max} (-beta Omega^(l)).
inline GrandPotential grand_potential_total(const Measurements& meas) {
  GrandPotential g;
  const auto ln_xi1 = analytic_monomer_log_xi(meas.model(), meas.state(), meas.options().spec);
  g.monomer_known = ln_xi1.has_value();
  g.monomer = ln_xi1.value_or(0.0);
  const auto& lay = meas.layout();
  if (lay.loops() > 0) detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  for (std::size_t l = 2; l <= lay.l_max; ++l) g.loops.push_back(loop_grand_potential(meas, l));
  g.total = meas.accumulator().jackknife([&](std::span<const Complex> m) {
    Complex sum = g.monomer;
    for (std::size_t l = 2; l <= lay.l_max; ++l) sum += cdiv(m[lay.loop(l, ChannelLayout::Eta)], m[ChannelLayout::W]);
    return sum;
  });
  return g;
}

enum class Kernel { W, WH };
enum class EnergyForm { Fluctuation, Direct };

struct MonomerEnergy {
  Estimate with_w;   // <H>_{W,1}
  Estimate with_wh;  // <H>_{W_H,1}
};

inline MonomerEnergy energy_monomer(const Measurements& meas) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  return {meas.accumulator().ratio(ChannelLayout::HW, ChannelLayout::W),
          meas.accumulator().ratio(ChannelLayout::HWH, ChannelLayout::W)};
}

namespace detail {

inline std::size_t kernel_channel(Kernel k) { return k == Kernel::W ? ChannelLayout::HW : ChannelLayout::HWH; }
inline ChannelLayout::Loop kernel_loop_channel(Kernel k) {
  return k == Kernel::W ? ChannelLayout::HEta : ChannelLayout::HWHEta;
}

/// E_l from channel means.
inline Complex loop_energy(std::span<const Complex> m, const ChannelLayout& lay, std::size_t l, Kernel k,
                           EnergyForm form) {
  const Complex w = m[ChannelLayout::W];
  const Complex e1 = cdiv(m[kernel_channel(k)], w);
  const Complex a = cdiv(m[lay.loop(l, ChannelLayout::Eta)], w);
  const Complex he = cdiv(m[lay.loop(l, kernel_loop_channel(k))], w);
  if (form == EnergyForm::Direct) return -a * e1 + he;  // beta Omega^(l) E_1 + <H eta-dot>
  // <(H - E_1)(eta-dot - <eta-dot>)>, expanded over the stream sums
  return he - e1 * a - e1 * a + e1 * a;
}

}  // namespace detail

/// E_l as the covariance of H with eta-dot^(l) (fluctuation form) or as
/// beta Omega^(l) E_1 + <H eta-dot^(l)> (direct form).
inline Estimate energy_loop(const Measurements& meas, std::size_t l, Kernel k = Kernel::W,
                            EnergyForm form = EnergyForm::Fluctuation) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  const auto& lay = meas.layout();
  lay.loop(l, ChannelLayout::Eta);
  return meas.accumulator().jackknife(
      [&](std::span<const Complex> m) { return detail::loop_energy(m, lay, l, k, form); });
}

/// Eight energy estimates indexed pairing * 4 + kernel * 2 + form:
///   pairing 0: W_p with eta_q; 1: the conjugate pairing W_q with eta_p,
///   kernel 0: W; 1: W_H,
///   form 0: trace, covariance of H with the total eta-dot;
///   form 1: derivative of the loop series, E_1 + sum_l E_l (direct forms).
struct EnergyRouteReport {
  std::array<Estimate, 8> routes;
  static constexpr int index(int pairing, int kernel, int form) { return pairing * 4 + kernel * 2 + form; }
};

inline EnergyRouteReport energy_eight_routes(const Measurements& meas) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  const auto& lay = meas.layout();
  EnergyRouteReport r;
  for (int pairing = 0; pairing < 2; ++pairing)
    for (int kernel = 0; kernel < 2; ++kernel)
      for (int form = 0; form < 2; ++form) {
        const Kernel k = kernel == 0 ? Kernel::W : Kernel::WH;
        r.routes[EnergyRouteReport::index(pairing, kernel, form)] =
            meas.accumulator().jackknife([&](std::span<const Complex> raw) {
              std::vector<Complex> conj;
              std::span<const Complex> m = raw;
              if (pairing == 1) {
                conj = detail::conj_all(raw);
                m = conj;
              }
              const Complex w = m[ChannelLayout::W];
              const Complex e1 = cdiv(m[detail::kernel_channel(k)], w);
              if (form == 1) {
                Complex e = e1;
                for (std::size_t l = 2; l <= lay.l_max; ++l) e += detail::loop_energy(m, lay, l, k, EnergyForm::Direct);
                return e;
              }
              Complex eta{}, heta{};
              for (std::size_t l = 2; l <= lay.l_max; ++l) {
                eta += m[lay.loop(l, ChannelLayout::Eta)];
                heta += m[lay.loop(l, detail::kernel_loop_channel(k))];
              }
              return e1 + cdiv(heta, w) - e1 * cdiv(eta, w);
            });
      }
  return r;
}

/// Total energy E_1 + sum_l E_l (fluctuation forms, W kernel).
inline Estimate energy_total(const Measurements& meas, Kernel k = Kernel::W) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  const auto& lay = meas.layout();
  return meas.accumulator().jackknife([&](std::span<const Complex> m) {
    Complex e = cdiv(m[detail::kernel_channel(k)], m[ChannelLayout::W]);
    for (std::size_t l = 2; l <= lay.l_max; ++l) e += detail::loop_energy(m, lay, l, k, EnergyForm::Fluctuation);
    return e;
  });
}

/// C_V / k_B = -beta^2 sum_l dE_l/dbeta at constant V and z, with
///   dE_1/db = E_1^2 - <H^2 - H dlnW/db>,
///   dE_l/db = -<(H^2 - H dlnW/db) eta-dot> + (E_l + a_l E_1) E_1 + E_l E_1 - a_l dE_1/db,
/// where a_l = -beta Omega^(l) and all averages are monomer averages.
inline Estimate heat_capacity(const Measurements& meas) {
  detail::require_denominator(meas.accumulator(), ChannelLayout::W);
  const auto& lay = meas.layout();
  const double beta = meas.state().beta;
  return meas.accumulator().jackknife([&](std::span<const Complex> m) {
    const Complex w = m[ChannelLayout::W];
    const Complex e1 = cdiv(m[ChannelLayout::HW], w);
    const Complex d1 = e1 * e1 - cdiv(m[ChannelLayout::H2], w);
    Complex d = d1;
    for (std::size_t l = 2; l <= lay.l_max; ++l) {
      const Complex a = cdiv(m[lay.loop(l, ChannelLayout::Eta)], w);
      const Complex el = detail::loop_energy(m, lay, l, Kernel::W, EnergyForm::Direct);
      d += -cdiv(m[lay.loop(l, ChannelLayout::H2Eta)], w) + (el + a * e1) * e1 + el * e1 - a * d1;
    }
    return -beta * beta * d;
  });
}

/// E[dW/dbeta] / E[|W|]: the per-sample form of the vanishing identity.
inline Estimate vanishing_statistic(const Measurements& meas) {
  return meas.accumulator().jackknife(
      [](std::span<const Complex> m) { return m[ChannelLayout::DW] / m[ChannelLayout::AbsW].real(); });
}

/// Classical-limit test of the dimer factorization. With the momentum
/// averaged dimer weight s_jk = exp(-2 pi r_jk^2 / Lambda^2) over graph
/// pairs, S = sum s_jk and P = sum over unordered pairs of disjoint dimers
/// of s_jk s_mn. The ratio (<P> - <S>^2 / 2) / (<S>^2 / 2) vanishes for an
/// ideal gas and as 1/V for a fluid.
class DimerFactorization {
 public:
  enum Channel : std::size_t { S, P, kChannels };

  DimerFactorization(const ThermoState& s, double f_cut = 1.5, std::size_t block_size = 100)
      : state_(s), f_cut_(f_cut), acc_(kChannels, block_size) {}

  static std::array<double, 2> sums(const PhaseConfig& c, const ThermoState& s, double f_cut) {
    const auto g = build_neighbor_graph(c, s, f_cut);
    const double a = 2.0 * std::numbers::pi / (thermal_wavelength(s) * thermal_wavelength(s));
    double S = 0.0, S2 = 0.0, R2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      double r = 0.0;
      for (std::size_t j : g.neighbors(i)) {
        const double w = std::exp(-a * detail::squared_separation(c, i, j, s));
        r += w;
        if (j > i) {
          S += w;
          S2 += w * w;
        }
      }
      R2 += r * r;
    }
    // ordered pairs of pairs sharing a particle: sum_i r_i^2 - sum s^2
    return {S, 0.5 * (S * S + S2 - R2)};
  }

  void add(const PhaseConfig& c) {
    const auto v = sums(c, state_, f_cut_);
    const Complex x[kChannels] = {v[0], v[1]};
    acc_.add(x);
  }
  void add(const SampleRecord& r) { add(r.config); }
  void merge(const DimerFactorization& o) { acc_.merge(o.acc_); }

  Estimate ratio() const {
    if (acc_.empty()) throw std::invalid_argument("DimerFactorization: empty stream");
    return acc_.jackknife([](std::span<const Complex> m) {
      const double half = 0.5 * m[S].real() * m[S].real();
      return Complex((m[P].real() - half) / half, 0.0);
    });
  }
  Estimate mean_dimer_sum() const { return acc_.mean(S); }
  const Accumulator& accumulator() const { return acc_; }

 private:
  ThermoState state_;
  double f_cut_;
  Accumulator acc_;
};

}  // namespace qps

#endif  // QPS_ESTIMATORS_HPP
