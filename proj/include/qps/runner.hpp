// Batch execution of a RunConfig: chains and sweep points run as
// independent tasks, results are merged per point in a fixed order and
// written as results.csv, density CSVs and manifest.json.

#ifndef QPS_RUNNER_HPP
#define QPS_RUNNER_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "qps/config.hpp"
#include "qps/density.hpp"
#include "qps/parallel.hpp"
#include "qps/virial.hpp"

#define QPS_VERSION "1.0.0"

namespace qps {

struct ResultRow {
  std::string observable;
  std::string l;  // loop order, 1 for monomer terms, or "total"
  double param_value = 0.0;
  Complex value{};
  double error = 0.0;
  long n_samples = 0;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunReport {
  bool ok = true;
  std::string error;          // failure message when !ok
  std::size_t points_done = 0;
  std::size_t points_total = 0;
  std::vector<ResultRow> rows;
  std::vector<OutputFile> files;
  double wall_seconds = 0.0;
  unsigned threads = 1;
};

/// Test hook: invoked at the start of every chain task.
struct RunHooks {
  std::function<void(std::size_t point, int chain)> on_chain;
};

/// Round-trip exact decimal form.
inline std::string format17(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto step = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return step(step(step(seed) ^ a) ^ b);
}

/// Everything one chain accumulates.
struct ChainWork {
  std::optional<Measurements> meas;
  std::optional<DensityHistogram> single, pair;
  std::optional<DimerFactorization> dimers;

  void merge(const ChainWork& o) {
    if (meas) meas->merge(*o.meas);
    if (single) single->merge(*o.single);
    if (pair) pair->merge(*o.pair);
    if (dimers) dimers->merge(*o.dimers);
  }
};

inline bool needs_measurements(const RunConfig& c) {
  for (const char* n : {"grand_potential", "energy", "energy_routes", "heat_capacity", "mean_n", "vanishing", "pressure"})
    if (c.wants(n)) return true;
  return false;
}

inline DensityOptions density_options(const RunConfig& c, int order) {
  DensityOptions d;
  d.order = order;
  d.bin_width = c.density.bin_width;
  d.with_loops = c.density.with_loops;
  d.l_max = std::max<std::size_t>(2, c.l_max);
  d.f_cut = c.f_cut;
  d.spec = c.w_spec;
  d.block_size = c.block_size;
  return d;
}

inline ChainWork run_chain(const RunConfig& c, const SystemModel& m, const ThermoState& s, std::size_t point,
                           int chain) {
  ChainWork w;
  if (needs_measurements(c)) {
    MeasureOptions mo;
    mo.spec = c.w_spec;
    mo.l_max = c.l_max;
    mo.f_cut = c.f_cut;
    mo.virial = c.wants("pressure");
    mo.block_size = c.block_size;
    mo.momentum_draws = c.momentum_draws;
    mo.momentum_seed = mix_seed(c.seed, point, 1000 + static_cast<std::uint64_t>(chain));
    w.meas.emplace(m, s, mo);
  }
  if (c.wants("density")) w.single.emplace(m, s, density_options(c, 1));
  if (c.wants("pair_density")) w.pair.emplace(m, s, density_options(c, 2));
  if (c.wants("factorization")) w.dimers.emplace(s, c.f_cut, c.block_size);

  SamplerConfig sc = c.sampler;
  sc.seed = mix_seed(c.seed, point);
  Chain ch(m, s, sc, chain);
  ch.run([&](const SampleRecord& r) {
    if (w.meas) w.meas->add(r);
    if (w.single) w.single->add(r);
    if (w.pair) w.pair->add(r);
    if (w.dimers) w.dimers->add(r);
  });
  if (c.checkpoint) {
    std::filesystem::create_directories(c.output);
    ch.save(c.output + "/chain_p" + std::to_string(point) + "_c" + std::to_string(chain) + ".qpsc");
  }
  return w;
}

inline std::string density_csv(const DensityHistogram& h, const RunConfig& c, double value) {
  std::ostringstream os;
  os << "# order: " << h.order() << "\n";
  os << "# correction: " << (h.with_loops() ? "on" : "off") << "\n";
  os << "# layout: " << (h.order() == 1 ? "slab" : h.radial() ? "radial" : "grid") << "\n";
  os << "# parameter: " << c.parameter_name() << " = " << format17(value) << "\n";
  const auto& s = h.state();
  os << "# beta: " << format17(s.beta) << "\n# fugacity: " << format17(s.fugacity) << "\n# box_edge: "
     << format17(s.box_edge) << "\n# dimension: " << s.dimension << "\n# statistics: " << to_string(s.statistics)
     << "\n# samples: " << h.count() << "\n";
  if (h.order() == 2 && !h.radial())
    os << "bin_center,bin_center_2,value_re,value_im,error\n";
  else
    os << "bin_center,value_re,value_im,error\n";
  for (std::size_t b = 0; b < h.bins(); ++b) {
    const auto e = h.value(b);
    if (h.order() == 1) {
      os << format17((b + 0.5) * h.slab_width());
    } else if (h.radial()) {
      const auto [lo, hi] = h.shell(b);
      os << format17(0.5 * (lo + hi));
    } else {
      os << format17((b / h.slabs() + 0.5) * h.slab_width()) << "," << format17((b % h.slabs() + 0.5) * h.slab_width());
    }
    os << "," << format17(e.real()) << "," << format17(e.imag()) << "," << format17(e.error) << "\n";
  }
  return os.str();
}

inline void point_rows(const RunConfig& c, const ChainWork& w, std::size_t point, double v, RunReport& out) {
  auto row = [&](const std::string& name, const std::string& l, const Estimate& e) {
    out.rows.push_back({name, l, v, e.value, e.error, e.n_samples});
  };
  auto exact = [&](const std::string& name, const std::string& l, double x, long n) {
    out.rows.push_back({name, l, v, Complex(x, 0.0), 0.0, n});
  };
  const std::string suffix = c.sweep.parameter.empty() ? "" : "_p" + std::to_string(point);
  if (w.meas) {
    const auto& meas = *w.meas;
    const long n = meas.count();
    if (c.wants("grand_potential")) {
      const auto g = grand_potential_total(meas);
      if (g.monomer_known) exact("grand_potential", "1", g.monomer, n);
      for (std::size_t l = 2; l <= c.l_max; ++l) row("grand_potential", std::to_string(l), g.loops[l - 2]);
      if (g.monomer_known) row("grand_potential", "total", g.total);
    }
    if (c.wants("energy")) {
      row("energy", "1", energy_monomer(meas).with_w);
      for (std::size_t l = 2; l <= c.l_max; ++l) row("energy", std::to_string(l), energy_loop(meas, l));
      row("energy", "total", energy_total(meas));
    }
    if (c.wants("energy_routes")) {
      const auto r = energy_eight_routes(meas);
      for (int p = 0; p < 2; ++p)
        for (int k = 0; k < 2; ++k)
          for (int f = 0; f < 2; ++f)
            row("energy_route_" + std::to_string(p) + std::to_string(k) + std::to_string(f), "total",
                r.routes[EnergyRouteReport::index(p, k, f)]);
    }
    if (c.wants("heat_capacity")) row("heat_capacity", "total", heat_capacity(meas));
    if (c.wants("mean_n")) row("mean_n", "1", monomer_average(meas, ChannelLayout::NW));
    if (c.wants("vanishing")) row("vanishing", "1", vanishing_statistic(meas));
    if (c.wants("pressure")) {
      const auto b = pressure(meas);
      row("pressure_kinetic", "1", b.kinetic);
      row("pressure_potential", "1", b.potential);
      row("pressure_gradient", "1", b.gradient);
      for (std::size_t l = 2; l <= c.l_max; ++l) row("pressure", std::to_string(l), b.loops[l - 2]);
      row("pressure", "total", b.total);
    }
  }
  if (w.single) {
    row("density_integral", "total", w.single->integral());
    out.files.push_back({"density_order1" + suffix + ".csv", density_csv(*w.single, c, v)});
  }
  if (w.pair) {
    row("pair_density_integral", "total", w.pair->integral());
    out.files.push_back({"density_order2" + suffix + ".csv", density_csv(*w.pair, c, v)});
  }
  if (w.dimers) {
    row("factorization_ratio", "2", w.dimers->ratio());
    row("dimer_sum", "2", w.dimers->mean_dimer_sum());
  }
}

}  // namespace detail

/// Runs every point of `values` (each an independent state) with
/// sampler.n_chains chains per point. Stops at the first failing point in
/// sweep order and keeps the rows of all points before it.
inline RunReport execute(const RunConfig& c, const std::vector<double>& values, const RunHooks& hooks = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport out;
  out.points_total = values.size();
  out.threads = worker_count();
  const SystemModel model = c.model.build();
  const std::size_t chains = static_cast<std::size_t>(c.sampler.n_chains);
  const std::size_t tasks = values.size() * chains;
  std::vector<std::optional<detail::ChainWork>> work(tasks);
  std::vector<std::string> errors(tasks);
  parallel_for(
      tasks,
      [&](std::size_t t) {
        const std::size_t point = t / chains;
        const int chain = static_cast<int>(t % chains);
        try {
          if (hooks.on_chain) hooks.on_chain(point, chain);
          work[t] = detail::run_chain(c, model, c.state_at(values[point]), point, chain);
        } catch (const std::exception& e) {
          errors[t] = e.what();
          if (errors[t].empty()) errors[t] = "unknown error";
        }
      },
      out.threads);
  for (std::size_t p = 0; p < values.size() && out.ok; ++p) {
    std::string failure;
    for (std::size_t k = 0; k < chains && failure.empty(); ++k)
      if (!errors[p * chains + k].empty()) failure = errors[p * chains + k];
    if (failure.empty()) {
      try {
        auto& merged = *work[p * chains];
        for (std::size_t k = 1; k < chains; ++k) merged.merge(*work[p * chains + k]);
        RunReport part;
        detail::point_rows(c, merged, p, values[p], part);
        out.rows.insert(out.rows.end(), part.rows.begin(), part.rows.end());
        out.files.insert(out.files.end(), part.files.begin(), part.files.end());
        ++out.points_done;
        continue;
      } catch (const std::exception& e) {
        failure = e.what();
      }
    }
    out.ok = false;
    out.error = "point " + std::to_string(p) + " (" + c.parameter_name() + " = " + format17(values[p]) + "): " + failure;
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "observable,l,param_value,estimate_re,estimate_im,error,n_samples\n";
  for (const auto& r : rows)
    os << r.observable << "," << r.l << "," << format17(r.param_value) << "," << format17(r.value.real()) << ","
       << format17(r.value.imag()) << "," << format17(r.error) << "," << r.n_samples << "\n";
  return os.str();
}

inline nlohmann::json manifest(const RunConfig& c, const RunReport& r, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) j["error"] = r.error;
  j["config"] = to_json(c);
  j["seed"] = c.seed;
  j["points_done"] = r.points_done;
  j["points_total"] = r.points_total;
  j["threads"] = r.threads;
  j["wall_seconds"] = r.wall_seconds;
  j["versions"] = {{"qps", QPS_VERSION},
                   {"compiler", __VERSION__},
                   {"cplusplus", __cplusplus},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  std::vector<std::string> files = {"results.csv"};
  for (const auto& f : r.files) files.push_back(f.name);
  j["files"] = files;
  return j;
}

/// Writes results.csv, the density files and manifest.json into
/// c.output. On failure the partial results are written together with a
/// FAILED marker file holding the message.
inline void write_outputs(const RunConfig& c, const RunReport& r, const std::string& command) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream os(fs::path(c.output) / name, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + (fs::path(c.output) / name).string());
  };
  put("results.csv", results_csv(r.rows));
  for (const auto& f : r.files) put(f.name, f.content);
  put("manifest.json", manifest(c, r, command).dump(2) + "\n");
  const fs::path marker = fs::path(c.output) / "FAILED";
  if (!r.ok)
    put("FAILED", r.error + "\n");
  else if (fs::exists(marker))
    fs::remove(marker);
}

inline RunReport run(const RunConfig& c, const RunHooks& hooks = {}) {
  auto r = execute(c, {c.base_parameter()}, hooks);
  write_outputs(c, r, "run");
  return r;
}

inline RunReport sweep(const RunConfig& c, const RunHooks& hooks = {}) {
  if (c.sweep.parameter.empty()) throw ConfigError("sweep", "the sweep command needs a sweep section");
  auto r = execute(c, c.sweep.values, hooks);
  write_outputs(c, r, "sweep");
  return r;
}

}  // namespace qps

#endif  // QPS_RUNNER_HPP
