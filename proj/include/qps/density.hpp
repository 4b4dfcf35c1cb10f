// Singlet and pair densities as reweighted histograms.
//
//   rho^(n)(Q^n) = <sum'_{j_1..j_n} prod_k delta(Q_k - q_{j_k})>,
//
// the primed sum running over distinct ordered labels. The loop-corrected
// density adds the covariance of the histogram count with the total
// single-loop sum, <d rho d eta-dot>_{W,1}.
//
// Singlet bins are slabs along the first axis. Pair bins are radial shells
// of the minimum-image separation up to L/2 plus one overflow bin, except in
// d = 1 where the pair density is binned over (x_1, x_2).

#ifndef QPS_DENSITY_HPP
#define QPS_DENSITY_HPP

#include <string>

#include "qps/estimators.hpp"
#include "qps/oracle.hpp"

namespace qps {

struct DensityOptions {
  int order = 1;
  double bin_width = 0.0;  // 0 selects Lambda / 20
  bool with_loops = false;
  std::size_t l_max = 2;
  double f_cut = 1.5;
  CommutationSpec spec = Classical{};
  std::size_t block_size = 100;
};

class DensityHistogram {
 public:
  // channel block
  enum Head : std::size_t { W, NW, FW, EtaW, FEtaW, kHead };

  DensityHistogram(const SystemModel& m, const ThermoState& s, const DensityOptions& opt)
      : model_(m), state_(s), opt_(opt) {
    if (opt.order != 1 && opt.order != 2) throw std::invalid_argument("DensityHistogram: order must be 1 or 2");
    if (s.boundary != Boundary::Periodic) throw std::invalid_argument("DensityHistogram: requires a periodic box");
    const double L = s.box_edge;
    double w = opt.bin_width > 0 ? opt.bin_width : thermal_wavelength(s) / 20.0;
    slabs_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(L / w)));
    slab_width_ = L / static_cast<double>(slabs_);
    if (opt.order == 1) {
      bins_ = slabs_;
    } else if (s.dimension == 1) {
      bins_ = slabs_ * slabs_;
    } else {
      r_max_ = 0.5 * L;
      radial_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r_max_ / w)));
      shell_width_ = r_max_ / static_cast<double>(radial_);
      bins_ = radial_ + 1;  // last bin: r >= L/2
    }
    marginals_ = opt.order == 2 ? slabs_ : 0;
    acc_ = Accumulator(kHead + 2 * bins_ + 2 * marginals_, opt.block_size);
  }

  int order() const { return opt_.order; }
  bool with_loops() const { return opt_.with_loops; }
  bool radial() const { return radial_ > 0; }
  std::size_t bins() const { return bins_; }
  std::size_t slabs() const { return slabs_; }
  double slab_width() const { return slab_width_; }
  double shell_width() const { return shell_width_; }
  double r_max() const { return r_max_; }
  const ThermoState& state() const { return state_; }
  const Accumulator& accumulator() const { return acc_; }
  long count() const { return acc_.count(); }

  std::size_t bin_channel(std::size_t b, bool eta) const { return kHead + 2 * b + eta; }
  std::size_t marginal_channel(std::size_t b, bool eta) const { return kHead + 2 * bins_ + 2 * b + eta; }

  /// Integration measure of bin b: the volume of the region of Q^n it covers.
  double bin_volume(std::size_t b) const {
    const double V = state_.volume();
    const double L = state_.box_edge;
    if (opt_.order == 1) return slab_width_ * V / L;
    if (!radial()) return slab_width_ * slab_width_;
    if (b == radial_) return V * (V - ball(r_max_));
    return V * (ball((b + 1) * shell_width_) - ball(b * shell_width_));
  }
  double slab_volume() const { return slab_width_ * state_.volume() / state_.box_edge; }

  /// Inner and outer radius of radial bin b.
  std::pair<double, double> shell(std::size_t b) const {
    if (b == radial_) return {r_max_, std::sqrt(static_cast<double>(state_.dimension)) * r_max_};
    return {b * shell_width_, (b + 1) * shell_width_};
  }

  void add(const PhaseConfig& c) {
    std::vector<Complex> x(acc_.channels(), Complex{});
    const Complex w = w_value(c, model_, state_, opt_.spec);
    Complex eta{};
    if (opt_.with_loops && c.size() >= 2 && exchange_sign(state_.statistics) != 0) {
      const auto g = build_neighbor_graph(c, state_, opt_.f_cut);
      const auto sums = single_loop_sums(c, state_, opt_.l_max, g);
      for (std::size_t l = 2; l <= opt_.l_max; ++l) eta += sums[l];
    }
    const double n = static_cast<double>(c.size());
    const double f = opt_.order == 1 ? n : n * (n - 1);
    x[W] = w;
    x[NW] = n * w;
    x[FW] = f * w;
    x[EtaW] = eta * w;
    x[FEtaW] = f * eta * w;
    counts_.assign(bins_, 0.0);
    auto slab = [&](std::size_t i) {
      auto k = static_cast<std::size_t>(wrap_coordinate(c.position(i)[0], state_.box_edge) / slab_width_);
      return std::min(k, slabs_ - 1);
    };
    if (opt_.order == 1) {
      for (std::size_t i = 0; i < c.size(); ++i) counts_[slab(i)] += 1.0;
    } else {
      for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
          if (radial()) {
            const double r = std::sqrt(detail::squared_separation(c, i, j, state_));
            const std::size_t b = r >= r_max_ ? radial_ : std::min(radial_ - 1, static_cast<std::size_t>(r / shell_width_));
            counts_[b] += 2.0;  // ordered pairs
          } else {
            const std::size_t a = slab(i), b = slab(j);
            counts_[a * slabs_ + b] += 1.0;
            counts_[b * slabs_ + a] += 1.0;
          }
        }
      for (std::size_t i = 0; i < c.size(); ++i) {
        x[marginal_channel(slab(i), false)] += (n - 1) * w;
        x[marginal_channel(slab(i), true)] += (n - 1) * eta * w;
      }
    }
    for (std::size_t b = 0; b < bins_; ++b) {
      if (counts_[b] == 0.0) continue;
      x[bin_channel(b, false)] = counts_[b] * w;
      x[bin_channel(b, true)] = counts_[b] * eta * w;
    }
    acc_.add(x);
  }
  void add(const SampleRecord& r) { add(r.config); }
  void merge(const DensityHistogram& o) { acc_.merge(o.acc_); }

  /// Monomer average of channel `k`, plus its covariance with eta-dot when
  /// loops are on.
  Complex corrected(std::span<const Complex> m, std::size_t k, std::size_t k_eta) const {
    const Complex w = m[W];
    Complex v = cdiv(m[k], w);
    if (opt_.with_loops) v += cdiv(m[k_eta], w) - v * cdiv(m[EtaW], w);
    return v;
  }

  /// rho^(n) in bin b.
  Estimate value(std::size_t b) const {
    detail::require_denominator(acc_, W);
    const double vol = bin_volume(b);
    return acc_.jackknife([&](std::span<const Complex> m) {
      return corrected(m, bin_channel(b, false), bin_channel(b, true)) / vol;
    });
  }
  std::vector<Estimate> values() const {
    std::vector<Estimate> out;
    for (std::size_t b = 0; b < bins_; ++b) out.push_back(value(b));
    return out;
  }

  /// Sum over bins of rho * volume.
  Estimate integral() const {
    detail::require_denominator(acc_, W);
    return acc_.jackknife([&](std::span<const Complex> m) {
      Complex sum{};
      for (std::size_t b = 0; b < bins_; ++b) sum += corrected(m, bin_channel(b, false), bin_channel(b, true));
      return sum;
    });
  }

  /// <N! / (N - n)!> sampled directly.
  Estimate factorial_moment() const {
    detail::require_denominator(acc_, W);
    return acc_.jackknife([&](std::span<const Complex> m) { return corrected(m, FW, FEtaW); });
  }

  /// Monomer <N>.
  Estimate mean_n() const { return acc_.ratio(NW, W); }

  /// g in radial bin b: rho^(2) / (<N>/V)^2.
  Estimate pair_correlation(std::size_t b) const {
    if (opt_.order != 2 || !radial()) throw std::invalid_argument("pair_correlation: needs a radial pair histogram");
    detail::require_denominator(acc_, W);
    const double vol = bin_volume(b), V = state_.volume();
    return acc_.jackknife([&](std::span<const Complex> m) {
      const Complex rho = cdiv(m[NW], m[W]) / V;
      return corrected(m, bin_channel(b, false), bin_channel(b, true)) / vol / (rho * rho);
    });
  }

  /// int dQ_2 rho^(2)(Q_1, Q_2) for Q_1 in slab b.
  Estimate marginal(std::size_t b) const {
    if (opt_.order != 2) throw std::invalid_argument("marginal: needs a pair histogram");
    detail::require_denominator(acc_, W);
    const double vol = slab_volume();
    return acc_.jackknife([&](std::span<const Complex> m) {
      return corrected(m, marginal_channel(b, false), marginal_channel(b, true)) / vol;
    });
  }

 private:
  double ball(double r) const {
    switch (state_.dimension) {
      case 1: return 2.0 * r;
      case 2: return std::numbers::pi * r * r;
      default: return 4.0 / 3.0 * std::numbers::pi * r * r * r;
    }
  }

  SystemModel model_;
  ThermoState state_;
  DensityOptions opt_;
  std::size_t slabs_ = 0, radial_ = 0, bins_ = 0, marginals_ = 0;
  double slab_width_ = 0.0, shell_width_ = 0.0, r_max_ = 0.0;
  Accumulator acc_;
  std::vector<double> counts_;
};

inline DensityHistogram accumulate_density(const std::vector<SampleRecord>& stream, const SystemModel& m,
                                           const ThermoState& s, const DensityOptions& opt) {
  if (stream.empty()) throw std::invalid_argument("accumulate_density: empty stream");
  DensityHistogram h(m, s, opt);
  for (const auto& r : stream) h.add(r);
  return h;
}

struct NormalizationReport {
  Estimate integral;
  Estimate factorial_moment;
  double difference = 0.0;
  double sigma = 0.0;
  bool pass = false;
};

/// Bin integral of rho^(n) against <N!/(N-n)!> from the same samples.
inline NormalizationReport check_normalization(const DensityHistogram& h) {
  NormalizationReport r;
  r.integral = h.integral();
  r.factorial_moment = h.factorial_moment();
  r.difference = r.integral.real() - r.factorial_moment.real();
  r.sigma = std::hypot(r.integral.error, r.factorial_moment.error);
  r.pass = std::abs(r.difference) <= 3.0 * r.sigma + 1e-10 * std::max(1.0, std::abs(r.factorial_moment.real()));
  return r;
}

struct ReductionBin {
  Estimate marginal;  // int dQ_2 rho^(2)
  Estimate expected;  // c rho^(1)
  bool pass = false;
};

struct ReductionReport {
  std::vector<ReductionBin> bins;
  Estimate factor;          // c = <N(N-1)> / <N>
  double mean_n_minus_one;  // the thermodynamic-limit factor N-bar - 1
  std::size_t failures = 0;
  bool pass = false;
};

/// int dQ_2 rho^(2)(Q_1, Q_2) = c rho^(1)(Q_1), c = <N(N-1)>/<N>, per slab
/// within 3 sigma. c tends to N-bar - 1 when N fluctuations are negligible.
inline ReductionReport check_reduction(const DensityHistogram& pair, const DensityHistogram& single) {
  if (pair.order() != 2 || single.order() != 1) throw std::invalid_argument("check_reduction: expects orders 2 and 1");
  if (pair.slabs() != single.slabs() || pair.slab_width() != single.slab_width())
    throw std::invalid_argument("check_reduction: incompatible binning");
  ReductionReport r;
  const Estimate nn = pair.factorial_moment(), n = single.factorial_moment();
  r.factor.error = 0.0;
  r.factor.n_samples = n.n_samples;
  if (n.value != Complex{}) {
    r.factor.value = nn.value / n.value;
    r.factor.error = std::abs(r.factor.real()) * std::hypot(nn.error / nn.real(), n.error / n.real());
  }
  r.mean_n_minus_one = n.real() - 1.0;
  for (std::size_t b = 0; b < single.slabs(); ++b) {
    ReductionBin bin;
    bin.marginal = pair.marginal(b);
    const Estimate rho = single.value(b);
    bin.expected.value = r.factor.value * rho.value;
    bin.expected.error = std::hypot(r.factor.real() * rho.error, rho.real() * r.factor.error);
    const double sigma = std::hypot(bin.marginal.error, bin.expected.error);
    bin.pass = std::abs(bin.marginal.real() - bin.expected.real()) <= 3.0 * sigma + 1e-12;
    r.failures += !bin.pass;
    r.bins.push_back(bin);
  }
  // per-bin 3 sigma tests fail at a rate of 0.27% each
  const double allowed = std::max(1.0, std::ceil(0.01 * static_cast<double>(single.slabs())));
  r.pass = static_cast<double>(r.failures) <= allowed;
  return r;
}

struct PairEnergy {
  Estimate value;
  bool coarse_bins = false;  // some bin spans a large change of u
};

/// <U> = 1/2 int rho^(2) u, with u averaged over each radial shell.
inline PairEnergy potential_energy_from_pair_density(const DensityHistogram& h, const PairFunction& u,
                                                     double cutoff) {
  if (h.order() != 2 || !h.radial()) throw std::invalid_argument("potential_energy_from_pair_density: needs radial pair histogram");
  const int d = h.state().dimension;
  PairEnergy out;
  std::vector<double> ubar(h.bins(), 0.0);
  const auto rule = gauss_legendre(8, 0.0, 1.0);
  for (std::size_t b = 0; b < h.bins(); ++b) {
    auto [lo, hi] = h.shell(b);
    hi = std::min(hi, cutoff);
    if (lo >= hi) continue;
    double num = 0.0, den = 0.0;
    auto [lo0, hi0] = h.shell(b);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double r = lo0 + (hi0 - lo0) * rule.nodes[k];
      const double jac = std::pow(r, d - 1) * rule.weights[k];
      den += jac;
      if (r < cutoff) num += jac * u.value(r);
    }
    ubar[b] = num / den;
    const double ulo = u.value(std::max(lo, 1e-12)), uhi = u.value(hi);
    if (b + 1 < h.bins() && std::abs(ulo - uhi) > 0.1 * u.epsilon) out.coarse_bins = true;
  }
  detail::require_denominator(h.accumulator(), DensityHistogram::W);
  out.value = h.accumulator().jackknife([&](std::span<const Complex> m) {
    Complex sum{};
    for (std::size_t b = 0; b < h.bins(); ++b)
      if (ubar[b] != 0.0) sum += ubar[b] * h.corrected(m, h.bin_channel(b, false), h.bin_channel(b, true));
    return 0.5 * sum;
  });
  return out;
}

}  // namespace qps

#endif  // QPS_DENSITY_HPP
