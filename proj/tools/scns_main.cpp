#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scns/errors.hpp"
#include "scns/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
  auto* opt = sub->add_option("--config", c.config, "INI configuration (or a run's manifest.json)");
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output directory (default: [run] out)");
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

scns::RunConfig load(const Common& c) {
  scns::RunConfig config = scns::load_config(c.config);
  scns::apply_environment(config);
  return config;
}

fs::path out_dir(const Common& c, const scns::RunConfig& config) { return c.out.empty() ? config.out : c.out; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string cur;
  for (char ch : s + ",") {
    if (ch == ',' || ch == ' ') {
      if (!cur.empty()) items.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return items;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic compressible Navier-Stokes on the torus: simulation and diagnostics"};
  app.require_subcommand(1);

  Common sim, diag, stat, sweep;
  auto* c_sim = app.add_subcommand("simulate", "run the configured ensemble and write snapshots");
  add_common(c_sim, sim);
  auto* c_diag = app.add_subcommand("diagnose", "evaluate diagnostics on a finished run");
  add_common(c_diag, diag, false);
  std::string run_dir, which, level;
  std::optional<double> alpha;
  c_diag->add_option("--run", run_dir, "run directory (default: --out, the config's directory, or [run] out)");
  c_diag->add_option("--which", which, "comma list of energy,mass,renorm,evf,korn,lower-bound,ergodic");
  c_diag->add_option("--alpha", alpha, "exponent for the delta-level flux test function");
  c_diag->add_option("--level", level, "flux identity level: epsilon or delta");
  auto* c_stat = app.add_subcommand("stationarity", "ensemble stationarity report");
  add_common(c_stat, stat);
  auto* c_sweep = app.add_subcommand("sweep", "parameter sweep with stationary-regime statistics");
  add_common(c_sweep, sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : scns::exit_validation;
  }

  return scns::guarded(
      [&]() -> int {
        if (c_sim->parsed()) {
          const auto config = load(sim);
          return scns::cmd_simulate(config, out_dir(sim, config), sim.jobs, std::cout);
        }
        if (c_stat->parsed()) {
          const auto config = load(stat);
          return scns::cmd_stationarity(config, out_dir(stat, config), stat.jobs, std::cout);
        }
        if (c_sweep->parsed()) {
          const auto config = load(sweep);
          return scns::cmd_sweep(config, out_dir(sweep, config), sweep.jobs, std::cout);
        }

        std::optional<scns::RunConfig> given;
        if (!diag.config.empty()) given = load(diag);
        fs::path dir = run_dir;
        if (dir.empty()) dir = diag.out;
        if (dir.empty() && given) {
          const fs::path parent = fs::path(diag.config).parent_path();
          dir = fs::exists(parent / "manifest.json") ? parent : fs::path(given->out);
        }
        if (dir.empty()) throw scns::ConfigError("diagnose", "--run, --out or --config required");

        std::optional<scns::DiagnosticsSettings> settings;
        if (given || !which.empty() || alpha || !level.empty()) {
          settings = given ? given->diagnostics : scns::load_config(dir / "config.ini").diagnostics;
          if (!which.empty()) settings->which = split_list(which);
          if (alpha) settings->evf_alpha = *alpha;
          if (level == "epsilon") settings->evf_level = scns::FluxLevel::epsilon;
          else if (level == "delta") settings->evf_level = scns::FluxLevel::delta;
          else if (!level.empty()) throw scns::ConfigError("diagnostics.evf_level", "must be epsilon or delta");
        }
        return scns::cmd_diagnose(dir, settings, diag.jobs, std::cout);
      },
      std::cerr);
}
