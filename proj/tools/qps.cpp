// qps: run <config> | sweep <config> | validate [--quick] [--tamper-sign]

#include <CLI11.hpp>

#include "qps/qps.hpp"

namespace {

int execute_config(const std::string& path, bool sweep) {
  qps::RunConfig cfg;
  try {
    cfg = qps::load_run_config(path);
  } catch (const qps::ConfigError& e) {
    std::cerr << "config error in " << path << ": " << e.what() << "\n";
    return 2;
  }
  try {
    const auto r = sweep ? qps::sweep(cfg) : qps::run(cfg);
    std::cout << "wrote " << cfg.output << "/results.csv (" << r.rows.size() << " rows, " << r.points_done << "/"
              << r.points_total << " points, " << r.wall_seconds << " s)\n";
    if (!r.ok) {
      std::cerr << "run failed: " << r.error << "\n";
      return 1;
    }
  } catch (const qps::ConfigError& e) {
    std::cerr << "config error in " << path << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-space quantum statistics: loop-series Monte Carlo and quadrature oracles"};
  app.require_subcommand(1);

  std::string run_path, sweep_path;
  auto* run = app.add_subcommand("run", "Run one state point from a JSON config");
  run->add_option("config", run_path, "Config file")->required()->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "Run every point of the config's sweep section");
  sweep->add_option("config", sweep_path, "Config file")->required()->check(CLI::ExistingFile);

  qps::BatteryOptions opt;
  auto* validate = app.add_subcommand("validate", "Run the acceptance battery");
  validate->add_flag("--quick", opt.quick, "Quadrature and property criteria only");
  validate->add_flag("--tamper-sign", opt.tamper_sign, "Evaluate fermions with the boson sign (mutation check)");

  CLI11_PARSE(app, argc, argv);

  if (*run) return execute_config(run_path, false);
  if (*sweep) return execute_config(sweep_path, true);
  return qps::battery_passed(qps::run_battery(opt)) ? 0 : 1;
}
