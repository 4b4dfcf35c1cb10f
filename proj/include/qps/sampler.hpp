// Grand-canonical Monte Carlo over the classical measure
//   z^N / (h^{dN} N!) exp(-beta H(p, q)),
// with positions moved by Metropolis displacements and particle number by
// insertion/deletion, and momenta drawn directly from their Gaussian
// marginal. Commutation and symmetrization factors never enter the chain;
// they are folded into estimators by reweighting.

#ifndef QPS_SAMPLER_HPP
#define QPS_SAMPLER_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qps/core.hpp"

namespace qps {

using Rng = std::mt19937_64;

struct SamplerConfig {
  double max_displacement = 0.5;     // initial value; tuned during equilibration
  double insert_delete_ratio = 0.5;  // probability that a GCMC step attempts an insertion
  long sweeps = 1000;
  long equilibration_sweeps = 200;
  long thinning = 1;                 // sweeps between recorded samples
  std::uint64_t seed = 1;
  int n_chains = 1;
  int gcmc_moves = 0;                // per sweep; 0 selects max(1, zV/Lambda^d)
  double target_acceptance = 0.4;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
      if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
    };
    require(std::isfinite(max_displacement) && max_displacement > 0, "max_displacement", "must be positive");
    require(insert_delete_ratio > 0 && insert_delete_ratio < 1, "insert_delete_ratio", "must lie in (0, 1)");
    require(sweeps >= 0, "sweeps", "must be non-negative");
    require(equilibration_sweeps >= 0, "equilibration_sweeps", "must be non-negative");
    require(thinning >= 1, "thinning", "must be at least 1");
    require(n_chains >= 1, "n_chains", "must be at least 1");
    require(gcmc_moves >= 0, "gcmc_moves", "must be non-negative");
    require(target_acceptance > 0 && target_acceptance < 1, "target_acceptance", "must lie in (0, 1)");
  }
};

struct SampleRecord {
  PhaseConfig config;
  double U = 0.0;
  double K = 0.0;
  int chain = 0;
  long sweep = 0;
};

struct MoveStats {
  long attempted = 0;
  long accepted = 0;
  double ratio() const { return attempted ? static_cast<double>(accepted) / attempted : 0.0; }
  MoveStats& operator+=(const MoveStats& o) {
    attempted += o.attempted;
    accepted += o.accepted;
    return *this;
  }
};

/// n * d momentum components, each normal with variance m / beta.
inline std::vector<double> sample_momenta(std::size_t n, const ThermoState& s, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(s.mass / s.beta));
  std::vector<double> p(n * static_cast<std::size_t>(s.dimension));
  for (double& x : p) x = gauss(rng);
  return p;
}

inline void redraw_momenta(PhaseConfig& c, const ThermoState& s, Rng& rng) {
  c.momenta() = sample_momenta(c.size(), s, rng);
}

namespace detail {

inline bool metropolis_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0) return true;
  if (std::isnan(log_ratio)) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < std::exp(log_ratio);
}

}  // namespace detail

/// One displacement attempt per particle, in label order.
inline MoveStats metropolis_sweep(PhaseConfig& c, const SystemModel& m, const ThermoState& s,
                                  const SamplerConfig& cfg, Rng& rng) {
  MoveStats st;
  const int d = c.dimension();
  const bool periodic = s.boundary == Boundary::Periodic;
  std::uniform_real_distribution<double> step(-cfg.max_displacement, cfg.max_displacement);
  std::vector<double> old(d);
  const bool interacting = !m.is_ideal();
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto q = c.position(i);
    std::copy(q.begin(), q.end(), old.begin());
    const double before = interacting ? m.particle_energy(c, i, s) : 0.0;
    for (int a = 0; a < d; ++a) {
      q[a] += step(rng);
      if (periodic) q[a] = wrap_coordinate(q[a], s.box_edge);
    }
    const double after = interacting ? m.particle_energy(c, i, s) : 0.0;
    ++st.attempted;
    if (detail::metropolis_accept(-s.beta * (after - before), rng)) {
      ++st.accepted;
    } else {
      std::copy(old.begin(), old.end(), q.begin());
    }
  }
  return st;
}

/// One insertion or deletion attempt. An insertion is tried with probability
/// p = insert_delete_ratio; the factor (1 - p) / p in the acceptance keeps
/// detailed balance for p != 1/2.
inline MoveStats gcmc_step(PhaseConfig& c, const SystemModel& m, const ThermoState& s, const SamplerConfig& cfg,
                           Rng& rng) {
  if (s.boundary != Boundary::Periodic) throw std::invalid_argument("gcmc_step: requires a periodic box");
  MoveStats st;
  st.attempted = 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double p_ins = cfg.insert_delete_ratio;
  const double activity = s.fugacity * s.volume() / std::pow(thermal_wavelength(s), s.dimension);
  const std::size_t n = c.size();
  const int d = c.dimension();
  if (unit(rng) < p_ins) {
    std::vector<double> q(d);
    for (double& x : q) x = unit(rng) * s.box_edge;
    for (double& x : q) x = wrap_coordinate(x, s.box_edge);
    const double dU = m.insertion_energy(c, q, s);
    const double log_ratio = std::log(activity / (n + 1.0) * (1.0 - p_ins) / p_ins) - s.beta * dU;
    if (detail::metropolis_accept(log_ratio, rng)) {
      auto p = sample_momenta(1, s, rng);
      c.add_particle(q, p);
      st.accepted = 1;
    }
  } else {
    if (n == 0) return st;
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const double dU = -m.particle_energy(c, i, s);
    const double log_ratio = std::log(n / activity * p_ins / (1.0 - p_ins)) - s.beta * dU;
    if (detail::metropolis_accept(log_ratio, rng)) {
      c.remove_particle(i);
      st.accepted = 1;
    }
  }
  return st;
}

/// Sequential state of one Markov chain. Copyable and checkpointable.
class Chain {
 public:
  Chain(const SystemModel& m, const ThermoState& s, const SamplerConfig& cfg, int id)
      : model_(m), state_(s), cfg_(cfg), id_(id), config_(s.dimension), displacement_(cfg.max_displacement) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(id)};
    rng_.seed(seq);
    displacement_ = std::min(displacement_, 0.5 * s.box_edge);
  }

  int id() const { return id_; }
  long sweep() const { return sweep_; }
  bool equilibrated() const { return sweep_ >= cfg_.equilibration_sweeps; }
  bool finished() const { return sweep_ >= cfg_.equilibration_sweeps + cfg_.sweeps; }
  double max_displacement() const { return displacement_; }
  const PhaseConfig& config() const { return config_; }
  const MoveStats& displacement_stats() const { return moves_; }
  const MoveStats& exchange_stats() const { return exchanges_; }
  Rng& rng() { return rng_; }

  int gcmc_moves() const {
    if (cfg_.gcmc_moves > 0) return cfg_.gcmc_moves;
    const double n = state_.fugacity * state_.volume() / std::pow(thermal_wavelength(state_), state_.dimension);
    return static_cast<int>(std::max(1.0, std::round(n)));
  }

  /// Advances one sweep. Returns true when a sample is due; the sample
  /// carries freshly drawn momenta.
  bool step(SampleRecord* out = nullptr) {
    SamplerConfig local = cfg_;
    local.max_displacement = displacement_;
    MoveStats sweep_moves = metropolis_sweep(config_, model_, state_, local, rng_);
    const int k = gcmc_moves();
    for (int i = 0; i < k; ++i) exchanges_ += gcmc_step(config_, model_, state_, local, rng_);
    ++sweep_;
    if (sweep_ <= cfg_.equilibration_sweeps) {
      tune_ += sweep_moves;
      if (sweep_ % 10 == 0 && tune_.attempted > 0) {
        // multiplicative tuning toward the target acceptance, frozen afterwards
        const double f = std::clamp(tune_.ratio() / cfg_.target_acceptance, 0.5, 2.0);
        displacement_ = std::min(displacement_ * f, 0.5 * state_.box_edge);
        tune_ = {};
      }
      return false;
    }
    moves_ += sweep_moves;
    const long production = sweep_ - cfg_.equilibration_sweeps;
    if (production % cfg_.thinning != 0) return false;
    redraw_momenta(config_, state_, rng_);
    if (out) {
      out->config = config_;
      out->U = model_.potential(config_, state_);
      out->K = kinetic_energy(config_, state_);
      out->chain = id_;
      out->sweep = sweep_;
    }
    return true;
  }

  /// Runs to completion, handing each sample to `sink`.
  void run(const std::function<void(const SampleRecord&)>& sink) {
    SampleRecord r;
    while (!finished())
      if (step(&r)) sink(r);
  }

  // Checkpoint layout (little-endian):
  //   char[8] "QPSCHAIN", uint32 version = 1,
  //   int32 chain id, int64 sweep, float64 max_displacement,
  //   int64 tune.attempted, int64 tune.accepted, int64 moves.attempted,
  //   int64 moves.accepted, int64 exchanges.attempted, int64 exchanges.accepted,
  //   int32 dimension, uint64 N, float64[N d] positions, float64[N d] momenta,
  //   uint64 rng byte count, char[] rng state in std::mt19937_64 text form.
  void save(std::ostream& os) const {
    static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian host");
    os.write("QPSCHAIN", 8);
    put<std::uint32_t>(os, 1);
    put<std::int32_t>(os, id_);
    put<std::int64_t>(os, sweep_);
    put<double>(os, displacement_);
    for (const MoveStats* m : {&tune_, &moves_, &exchanges_}) {
      put<std::int64_t>(os, m->attempted);
      put<std::int64_t>(os, m->accepted);
    }
    put<std::int32_t>(os, config_.dimension());
    put<std::uint64_t>(os, config_.size());
    os.write(reinterpret_cast<const char*>(config_.positions().data()),
             static_cast<std::streamsize>(config_.positions().size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(config_.momenta().data()),
             static_cast<std::streamsize>(config_.momenta().size() * sizeof(double)));
    std::ostringstream rs;
    rs << rng_;
    const std::string text = rs.str();
    put<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw std::runtime_error("Chain::save: write failed");
  }

  void load(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "QPSCHAIN", 8) != 0) throw std::runtime_error("Chain::load: not a chain checkpoint");
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("Chain::load: unsupported checkpoint version");
    id_ = get<std::int32_t>(is);
    sweep_ = get<std::int64_t>(is);
    displacement_ = get<double>(is);
    for (MoveStats* m : {&tune_, &moves_, &exchanges_}) {
      m->attempted = get<std::int64_t>(is);
      m->accepted = get<std::int64_t>(is);
    }
    const int d = get<std::int32_t>(is);
    if (d != state_.dimension) throw std::runtime_error("Chain::load: dimension mismatch");
    const auto n = get<std::uint64_t>(is);
    config_ = PhaseConfig(d);
    config_.resize(n);
    is.read(reinterpret_cast<char*>(config_.positions().data()),
            static_cast<std::streamsize>(config_.positions().size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(config_.momenta().data()),
            static_cast<std::streamsize>(config_.momenta().size() * sizeof(double)));
    std::string text(get<std::uint64_t>(is), '\0');
    is.read(text.data(), static_cast<std::streamsize>(text.size()));
    if (!is) throw std::runtime_error("Chain::load: truncated checkpoint");
    std::istringstream rs(text);
    rs >> rng_;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    save(os);
  }
  void load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("Chain::load: cannot open " + path);
    load(is);
  }

 private:
  template <class T>
  static void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  static T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("Chain::load: truncated checkpoint");
    return v;
  }

  SystemModel model_;
  ThermoState state_;
  SamplerConfig cfg_;
  int id_ = 0;
  PhaseConfig config_;
  Rng rng_;
  double displacement_;
  long sweep_ = 0;
  MoveStats tune_, moves_, exchanges_;
};

/// All samples of one chain, in order.
inline std::vector<SampleRecord> sample_chain(const SystemModel& m, const ThermoState& s, const SamplerConfig& cfg,
                                              int chain = 0) {
  std::vector<SampleRecord> out;
  Chain c(m, s, cfg, chain);
  c.run([&](const SampleRecord& r) { out.push_back(r); });
  return out;
}

}  // namespace qps

#endif  // QPS_SAMPLER_HPP
