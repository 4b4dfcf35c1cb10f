// Run configuration: a JSON document with nested sections, validated
// against a fixed key set before any computation. Errors name the
// offending field by its dotted path.

#ifndef QPS_CONFIG_HPP
#define QPS_CONFIG_HPP

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qps/commutation.hpp"
#include "qps/sampler.hpp"

namespace qps {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline const std::vector<std::string>& known_observables() {
  static const std::vector<std::string> names = {
      "grand_potential", "energy",  "energy_routes", "heat_capacity", "mean_n",
      "vanishing",       "pressure", "density",      "pair_density",  "factorization"};
  return names;
}

struct ModelConfig {
  std::string kind = "ideal_gas";  // ideal_gas, harmonic_well, pair_potential, particle_in_box
  double omega = 1.0;
  PairFunction pair;
  double cutoff = 2.5;

  SystemModel build() const {
    if (kind == "harmonic_well") return SystemModel::harmonic_well(omega);
    if (kind == "pair_potential") return SystemModel::pair_potential(pair, cutoff);
    if (kind == "particle_in_box") return SystemModel::particle_in_box();
    return SystemModel::ideal_gas();
  }
};

struct SweepConfig {
  std::string parameter;  // empty: no sweep; otherwise beta or fugacity
  std::vector<double> values;
};

struct DensityConfig {
  double bin_width = 0.0;  // 0 selects Lambda / 20
  bool with_loops = false;
};

struct RunConfig {
  ModelConfig model;
  ThermoState state;
  SamplerConfig sampler;
  CommutationSpec w_spec = Classical{};
  std::size_t l_max = 1;
  double f_cut = 1.5;
  int momentum_draws = 1;
  std::size_t block_size = 100;
  std::vector<std::string> observables;
  DensityConfig density;
  SweepConfig sweep;
  std::string output = "out";
  std::uint64_t seed = 1;
  bool checkpoint = false;

  bool wants(const std::string& name) const {
    return std::find(observables.begin(), observables.end(), name) != observables.end();
  }
  double base_parameter() const { return sweep.parameter == "fugacity" ? state.fugacity : state.beta; }
  std::string parameter_name() const { return sweep.parameter.empty() ? "beta" : sweep.parameter; }
  ThermoState state_at(double value) const {
    ThermoState s = state;
    if (parameter_name() == "fugacity")
      s.fugacity = value;
    else
      s.beta = value;
    return s;
  }
};

namespace detail {

using Json = nlohmann::json;

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= key == a;
    if (!ok) throw ConfigError(join(path, key), "unknown key");
  }
}

inline double get_number(const Json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  return v.get<double>();
}

inline long long get_integer(const Json& j, const std::string& path, const char* key, long long fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<long long>();
}

inline bool get_bool(const Json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v.get<bool>();
}

inline std::string get_choice(const Json& j, const std::string& path, const char* key, const std::string& fallback,
                              std::initializer_list<const char*> choices) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  const auto s = v.get<std::string>();
  std::string list;
  for (const char* c : choices) {
    if (s == c) return s;
    list += list.empty() ? c : std::string(", ") + c;
  }
  throw ConfigError(join(path, key), "'" + s + "' is not one of " + list);
}

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

inline ModelConfig parse_model(const Json& j) {
  check_keys(j, "model", {"kind", "omega", "pair", "cutoff"});
  ModelConfig m;
  m.kind = get_choice(j, "model", "kind", m.kind, {"ideal_gas", "harmonic_well", "pair_potential", "particle_in_box"});
  m.omega = get_number(j, "model", "omega", m.omega);
  require(std::isfinite(m.omega) && m.omega > 0, "model.omega", "must be positive");
  m.cutoff = get_number(j, "model", "cutoff", m.cutoff);
  require(std::isfinite(m.cutoff) && m.cutoff > 0, "model.cutoff", "must be positive");
  if (j.contains("pair")) {
    const auto& p = j.at("pair");
    check_keys(p, "model.pair", {"kind", "epsilon", "sigma", "exponent"});
    const auto kind = get_choice(p, "model.pair", "kind", "soft_sphere", {"soft_sphere", "gaussian_core"});
    m.pair.kind = kind == "soft_sphere" ? PairFunction::Kind::SoftSphere : PairFunction::Kind::GaussianCore;
    m.pair.epsilon = get_number(p, "model.pair", "epsilon", m.pair.epsilon);
    m.pair.sigma = get_number(p, "model.pair", "sigma", m.pair.sigma);
    m.pair.exponent = static_cast<int>(get_integer(p, "model.pair", "exponent", m.pair.exponent));
    require(std::isfinite(m.pair.epsilon), "model.pair.epsilon", "must be finite");
    require(std::isfinite(m.pair.sigma) && m.pair.sigma > 0, "model.pair.sigma", "must be positive");
    require(m.pair.exponent > 0, "model.pair.exponent", "must be positive");
  }
  return m;
}

inline ThermoState parse_state(const Json& j) {
  check_keys(j, "state", {"beta", "fugacity", "box_edge", "dimension", "statistics", "mass", "hbar", "boundary"});
  ThermoState s;
  s.beta = get_number(j, "state", "beta", s.beta);
  s.fugacity = get_number(j, "state", "fugacity", s.fugacity);
  s.box_edge = get_number(j, "state", "box_edge", s.box_edge);
  s.dimension = static_cast<int>(get_integer(j, "state", "dimension", s.dimension));
  s.mass = get_number(j, "state", "mass", s.mass);
  s.hbar = get_number(j, "state", "hbar", s.hbar);
  const auto st = get_choice(j, "state", "statistics", "boltzmann", {"bose", "fermi", "boltzmann"});
  s.statistics = st == "bose" ? Statistics::Bose : st == "fermi" ? Statistics::Fermi : Statistics::Boltzmann;
  const auto b = get_choice(j, "state", "boundary", "periodic", {"periodic", "open"});
  s.boundary = b == "open" ? Boundary::Open : Boundary::Periodic;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError("state." + msg.substr(0, colon), msg.substr(colon + 2));
  }
  return s;
}

inline SamplerConfig parse_sampler(const Json& j) {
  check_keys(j, "sampler", {"max_displacement", "insert_delete_ratio", "sweeps", "equilibration_sweeps", "thinning",
                            "n_chains", "gcmc_moves", "target_acceptance"});
  SamplerConfig c;
  c.max_displacement = get_number(j, "sampler", "max_displacement", c.max_displacement);
  c.insert_delete_ratio = get_number(j, "sampler", "insert_delete_ratio", c.insert_delete_ratio);
  c.sweeps = get_integer(j, "sampler", "sweeps", c.sweeps);
  c.equilibration_sweeps = get_integer(j, "sampler", "equilibration_sweeps", c.equilibration_sweeps);
  c.thinning = get_integer(j, "sampler", "thinning", c.thinning);
  c.n_chains = static_cast<int>(get_integer(j, "sampler", "n_chains", c.n_chains));
  c.gcmc_moves = static_cast<int>(get_integer(j, "sampler", "gcmc_moves", c.gcmc_moves));
  c.target_acceptance = get_number(j, "sampler", "target_acceptance", c.target_acceptance);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError("sampler." + msg.substr(0, colon), msg.substr(colon + 2));
  }
  return c;
}

inline CommutationSpec parse_w_spec(const Json& j) {
  check_keys(j, "w_spec", {"kind", "order", "n_max", "tail_tol"});
  const auto kind = get_choice(j, "w_spec", "kind", "classical", {"classical", "wigner_kirkwood", "eigen_series"});
  if (kind == "wigner_kirkwood") {
    WignerKirkwood wk;
    wk.order = static_cast<int>(get_integer(j, "w_spec", "order", wk.order));
    require(wk.order == 1 || wk.order == 2, "w_spec.order", "must be 1 or 2");
    return wk;
  }
  if (kind == "eigen_series") {
    EigenSeries es;
    es.n_max = static_cast<int>(get_integer(j, "w_spec", "n_max", es.n_max));
    es.tail_tol = get_number(j, "w_spec", "tail_tol", es.tail_tol);
    require(es.n_max > 0, "w_spec.n_max", "must be positive");
    require(es.tail_tol > 0 && es.tail_tol < 1, "w_spec.tail_tol", "must lie in (0, 1)");
    return es;
  }
  require(!j.contains("order") && !j.contains("n_max") && !j.contains("tail_tol"), "w_spec",
          "classical takes no parameters");
  return Classical{};
}

inline SweepConfig parse_sweep(const Json& j) {
  check_keys(j, "sweep", {"parameter", "values", "start", "stop", "count"});
  SweepConfig s;
  require(j.contains("parameter"), "sweep.parameter", "missing");
  s.parameter = get_choice(j, "sweep", "parameter", "", {"beta", "fugacity"});
  if (j.contains("values")) {
    require(!j.contains("start") && !j.contains("stop") && !j.contains("count"), "sweep.values",
            "give either values or start/stop/count");
    const auto& v = j.at("values");
    require(v.is_array() && !v.empty(), "sweep.values", "expected a non-empty array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(v[i].is_number(), "sweep.values[" + std::to_string(i) + "]", "expected a number");
      s.values.push_back(v[i].get<double>());
    }
  } else {
    require(j.contains("start"), "sweep.start", "missing");
    require(j.contains("stop"), "sweep.stop", "missing");
    require(j.contains("count"), "sweep.count", "missing");
    const double a = get_number(j, "sweep", "start", 0.0), b = get_number(j, "sweep", "stop", 0.0);
    const long long n = get_integer(j, "sweep", "count", 0);
    require(n >= 1, "sweep.count", "must be at least 1");
    for (long long i = 0; i < n; ++i) s.values.push_back(n == 1 ? a : a + (b - a) * i / static_cast<double>(n - 1));
  }
  for (std::size_t i = 0; i < s.values.size(); ++i)
    require(std::isfinite(s.values[i]) && s.values[i] > 0, "sweep.values[" + std::to_string(i) + "]",
            s.parameter + " must be positive");
  return s;
}

/// Checks combinations that only fail once a model, state and spec meet.
inline void check_consistency(const RunConfig& c) {
  const bool eigen = std::holds_alternative<EigenSeries>(c.w_spec);
  require(!(eigen && c.model.kind == "pair_potential"), "w_spec.kind",
          "eigen_series needs a model with an eigenbasis (not pair_potential)");
  require(!(eigen && c.model.kind == "particle_in_box" && c.state.dimension != 1), "w_spec.kind",
          "eigen_series for particle_in_box requires state.dimension = 1");
  require(!(c.wants("pressure") && eigen && c.model.kind == "particle_in_box"), "observables",
          "pressure is not available for particle_in_box with eigen_series (no gradient data)");
  require(!((c.wants("density") || c.wants("pair_density")) && c.state.boundary != Boundary::Periodic),
          "observables", "density histograms require state.boundary = periodic");
  require(!(c.density.with_loops && c.l_max < 2), "density.with_loops", "requires l_max >= 2");
}

}  // namespace detail

/// Parses and validates a configuration document. Throws ConfigError for
/// schema violations and for JSON syntax errors (with line and column).
inline RunConfig parse_run_config(const std::string& text) {
  using detail::Json;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<syntax>", e.what());
  }
  detail::check_keys(j, "", {"model", "state", "sampler", "w_spec", "l_max", "f_cut", "momentum_draws", "block_size",
                             "observables", "density", "sweep", "output", "seed", "checkpoint"});
  RunConfig c;
  if (j.contains("model")) c.model = detail::parse_model(j.at("model"));
  if (j.contains("state")) c.state = detail::parse_state(j.at("state"));
  if (j.contains("sampler")) c.sampler = detail::parse_sampler(j.at("sampler"));
  if (j.contains("w_spec")) c.w_spec = detail::parse_w_spec(j.at("w_spec"));
  const long long l_max = detail::get_integer(j, "", "l_max", 1);
  detail::require(l_max >= 1 && l_max <= 8, "l_max", "must lie in 1..8");
  c.l_max = static_cast<std::size_t>(l_max);
  c.f_cut = detail::get_number(j, "", "f_cut", c.f_cut);
  detail::require(std::isfinite(c.f_cut) && c.f_cut > 0, "f_cut", "must be positive");
  c.momentum_draws = static_cast<int>(detail::get_integer(j, "", "momentum_draws", c.momentum_draws));
  detail::require(c.momentum_draws >= 1, "momentum_draws", "must be at least 1");
  const long long block = detail::get_integer(j, "", "block_size", 100);
  detail::require(block >= 1, "block_size", "must be at least 1");
  c.block_size = static_cast<std::size_t>(block);
  if (j.contains("observables")) {
    const auto& o = j.at("observables");
    detail::require(o.is_array(), "observables", "expected an array of names");
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::string field = "observables[" + std::to_string(i) + "]";
      detail::require(o[i].is_string(), field, "expected a string");
      const auto name = o[i].get<std::string>();
      const auto& known = known_observables();
      detail::require(std::find(known.begin(), known.end(), name) != known.end(), field,
                      "unknown observable '" + name + "'");
      detail::require(!c.wants(name), field, "duplicate observable '" + name + "'");
      c.observables.push_back(name);
    }
  }
  detail::require(!c.observables.empty(), "observables", "at least one observable is required");
  if (j.contains("density")) {
    const auto& d = j.at("density");
    detail::check_keys(d, "density", {"bin_width", "with_loops"});
    c.density.bin_width = detail::get_number(d, "density", "bin_width", 0.0);
    detail::require(std::isfinite(c.density.bin_width) && c.density.bin_width >= 0, "density.bin_width",
                    "must be non-negative");
    c.density.with_loops = detail::get_bool(d, "density", "with_loops", false);
  }
  if (j.contains("sweep")) c.sweep = detail::parse_sweep(j.at("sweep"));
  if (j.contains("output")) {
    detail::require(j.at("output").is_string() && !j.at("output").get<std::string>().empty(), "output",
                    "expected a non-empty string");
    c.output = j.at("output").get<std::string>();
  }
  if (j.contains("seed")) {
    detail::require(j.at("seed").is_number_unsigned(), "seed", "expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.checkpoint = detail::get_bool(j, "", "checkpoint", false);
  detail::check_consistency(c);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

/// The configuration as a JSON object with every default made explicit.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["model"] = {{"kind", c.model.kind}, {"omega", c.model.omega}, {"cutoff", c.model.cutoff}};
  j["model"]["pair"] = {{"kind", c.model.pair.kind == PairFunction::Kind::SoftSphere ? "soft_sphere" : "gaussian_core"},
                        {"epsilon", c.model.pair.epsilon},
                        {"sigma", c.model.pair.sigma},
                        {"exponent", c.model.pair.exponent}};
  const auto& s = c.state;
  j["state"] = {{"beta", s.beta},
                {"fugacity", s.fugacity},
                {"box_edge", s.box_edge},
                {"dimension", s.dimension},
                {"statistics", to_string(s.statistics)},
                {"mass", s.mass},
                {"hbar", s.hbar},
                {"boundary", s.boundary == Boundary::Open ? "open" : "periodic"}};
  const auto& m = c.sampler;
  j["sampler"] = {{"max_displacement", m.max_displacement},
                  {"insert_delete_ratio", m.insert_delete_ratio},
                  {"sweeps", m.sweeps},
                  {"equilibration_sweeps", m.equilibration_sweeps},
                  {"thinning", m.thinning},
                  {"n_chains", m.n_chains},
                  {"gcmc_moves", m.gcmc_moves},
                  {"target_acceptance", m.target_acceptance}};
  if (auto* wk = std::get_if<WignerKirkwood>(&c.w_spec))
    j["w_spec"] = {{"kind", "wigner_kirkwood"}, {"order", wk->order}};
  else if (auto* es = std::get_if<EigenSeries>(&c.w_spec))
    j["w_spec"] = {{"kind", "eigen_series"}, {"n_max", es->n_max}, {"tail_tol", es->tail_tol}};
  else
    j["w_spec"] = {{"kind", "classical"}};
  j["l_max"] = c.l_max;
  j["f_cut"] = c.f_cut;
  j["momentum_draws"] = c.momentum_draws;
  j["block_size"] = c.block_size;
  j["observables"] = c.observables;
  j["density"] = {{"bin_width", c.density.bin_width}, {"with_loops", c.density.with_loops}};
  if (!c.sweep.parameter.empty()) j["sweep"] = {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["checkpoint"] = c.checkpoint;
  return j;
}

}  // namespace qps

#endif  // QPS_CONFIG_HPP
