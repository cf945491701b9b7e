#include "scns/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "scns/errors.hpp"
#include "scns/io.hpp"
#include "scns/spectral.hpp"

#ifndef SCNS_VERSION
#define SCNS_VERSION "dev"
#endif

namespace scns {

namespace fs = std::filesystem;

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i; !stop && (i = next++) < count;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::string member_dir(int member) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%03d", member);
  return buf;
}

namespace {

std::string snapshot_name(std::int64_t step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snap_%010lld.scns1", static_cast<long long>(step));
  return buf;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<fs::path> inventory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  return files;
}

void write_config_copy(const fs::path& dir, const RunConfig& config) {
  fs::create_directories(dir);
  write_file_atomic(dir / "config.ini", config.canonical());
}

Manifest base_manifest(const std::string& command, const RunConfig& config) {
  Manifest m;
  m.command = command;
  m.config_hash = config.hash();
  m.config_text = config.canonical();
  m.version = SCNS_VERSION;
  m.seed = config.seed;
  return m;
}

// Mass, energy, pressure and spectral statistics of one sweep cell.
struct CellStats {
  double mass_mean = 0.0;
  std::vector<double> energies;
  double pressure_integral = 0.0;
  int pressure_samples = 0;
  double min_rho = INFINITY;
  double tail_fraction = 0.0;
  int tail_samples = 0;
};

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Share of ‖u‖² carried by the outermost Galerkin shell |m|_∞ = N.
double tail_fraction(const SpectralVectorField& u) {
  const TorusGrid& g = u.grid();
  double tail = 0.0, total = 0.0;
  for (int c = 0; c < u.dim(); ++c) {
    const auto m = modes_of(u[c]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double e = std::norm(m[i]);
      total += e;
      if (g.mode_inf_norm(i) == g.galerkin_cutoff) tail += e;
    }
  }
  return total > 0.0 ? tail / total : -1.0;
}

}  // namespace

TrajectoryRecord simulate_member(const RunConfig& config, int member) {
  return simulate(config.initial_state(), config.horizon, config.params, config.noise_model(), config.stepper,
                  config.seed, static_cast<std::uint64_t>(member), config.record_options());
}

void write_member(const fs::path& dir, const TrajectoryRecord& record) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < record.states.size(); ++i)
    write_snapshot(dir / snapshot_name(record.steps[i]), record.states[i], record.params, record.noise_modes);
  write_trajectory_csv(dir / "trajectory.csv", record);
  write_increments(dir / "increments.bin", record);
}

TrajectoryRecord load_member(const fs::path& run_dir, const RunConfig& config, int member) {
  const fs::path dir = run_dir / member_dir(member);
  for (const char* name : {"trajectory.csv", "increments.bin"})
    if (!fs::exists(dir / name)) throw IoError("missing artifact " + (dir / name).string());
  int modes = 0;
  double dt = 0.0;
  const auto incs = read_increments(dir / "increments.bin", &modes, &dt);
  const NoiseModel noise = config.noise_model();
  if (modes != noise.size() || dt != config.stepper.dt)
    throw IoError("increments in " + dir.string() + " do not match the run configuration");
  TrajectoryRecord rec = simulate_with_increments(config.initial_state(), config.horizon, config.params, noise,
                                                  config.stepper, incs, config.seed,
                                                  static_cast<std::uint64_t>(member), config.record_options());
  const auto snap0 = encode_snapshot(rec.states.front(), config.params, noise.size());
  const fs::path first = dir / snapshot_name(rec.steps.front());
  if (!fs::exists(first)) throw IoError("missing artifact " + first.string());
  const std::string stored = read_file(first);
  if (stored != std::string(snap0.begin(), snap0.end()))
    throw IoError("initial snapshot in " + dir.string() + " does not match the run configuration");
  if (read_file(dir / "trajectory.csv") != trajectory_csv(rec))
    throw IoError("trajectory index in " + dir.string() + " does not reproduce from the stored increments");
  return rec;
}

bool health_ok(const TrajectoryRecord& record) {
  if (!record.health.positivity_ok) return false;
  if (record.symmetric && !(record.health.max_symmetry_defect < 1e-10)) return false;
  return true;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "scns";
  j["command"] = m.command;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["members"] = m.members;
  j["wall_clock_seconds"] = m.wall_seconds;
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : m.files) {
    const std::string bytes = read_file(dir / f);
    files.push_back({{"path", f.generic_string()}, {"bytes", bytes.size()}, {"fnv1a", fnv1a_hex(bytes)}});
  }
  j["files"] = files;
  auto health = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.health.size(); ++i) {
    const auto& h = m.health[i];
    health.push_back({{"member", i},
                      {"min_rho", h.min_rho},
                      {"max_symmetry_defect", h.max_symmetry_defect},
                      {"retries", h.retries},
                      {"positivity_ok", h.positivity_ok}});
  }
  j["health"] = health;
  j["config"] = m.config_text;
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

int cmd_simulate(const RunConfig& config, const fs::path& out, int jobs, std::ostream& log) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  write_config_copy(out, config);
  Manifest manifest = base_manifest("simulate", config);
  manifest.health.resize(static_cast<std::size_t>(config.members));
  std::vector<char> ok(static_cast<std::size_t>(config.members), 1);
  parallel_for(static_cast<std::size_t>(config.members), jobs, [&](std::size_t k) {
    const TrajectoryRecord rec = simulate_member(config, static_cast<int>(k));
    write_member(out / member_dir(static_cast<int>(k)), rec);
    manifest.health[k] = rec.health;
    ok[k] = health_ok(rec);
  });
  for (int k = 0; k < config.members; ++k) manifest.members.push_back(static_cast<std::uint64_t>(k));
  manifest.wall_seconds = elapsed(t0);
  manifest.files = inventory(out);
  write_manifest(out, manifest);
  const bool all_ok = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  log << "simulate: " << config.members << " member(s), T = " << config.horizon << ", dt = " << config.stepper.dt
      << ", config " << manifest.config_hash << " -> " << out.string() << "\n";
  for (std::size_t k = 0; k < manifest.health.size(); ++k)
    log << "  " << member_dir(static_cast<int>(k)) << ": min rho " << manifest.health[k].min_rho << ", retries "
        << manifest.health[k].retries << (ok[k] ? "" : "  HARD INVARIANT FAILED") << "\n";
  return all_ok ? exit_ok : exit_invariant;
}

int cmd_diagnose(const fs::path& run_dir, const std::optional<DiagnosticsSettings>& settings, int jobs,
                 std::ostream& log) {
  if (!fs::exists(run_dir / "config.ini")) throw IoError("missing artifact " + (run_dir / "config.ini").string());
  if (!fs::exists(run_dir / "manifest.json")) throw IoError("missing artifact " + (run_dir / "manifest.json").string());
  RunConfig config = load_config(run_dir / "config.ini");
  if (settings) config.diagnostics = *settings;
  config.validate();
  const auto& d = config.diagnostics;
  const NoiseModel noise = config.noise_model();
  const TimeWindow window{d.window_t0, d.window_t1 < 0.0 ? config.horizon : d.window_t1};

  std::vector<std::string> summary(static_cast<std::size_t>(config.members));
  std::vector<char> ok(summary.size(), 1);
  parallel_for(summary.size(), jobs, [&](std::size_t k) {
    const int member = static_cast<int>(k);
    const TrajectoryRecord rec = load_member(run_dir, config, member);
    const fs::path dir = run_dir / member_dir(member) / "diagnostics";
    fs::create_directories(dir);
    std::ostringstream s;
    s << member_dir(member) << ":\n";
    auto write_report = [&](const std::string& stem, const TermReport& r) {
      write_file_atomic(dir / (stem + ".csv"), report_csv(r));
      write_file_atomic(dir / (stem + ".txt"), report_text(r));
      s << "  " << stem << " residual " << num(r.residual) << "\n";
    };
    for (const auto& which : d.which) {
      if (which == "energy") {
        write_report("energy", energy_balance_residual(rec, window, config.params, noise));
      } else if (which == "mass") {
        const double res = mass_ode_residual(rec, config.params);
        const double bound = 10.0 * config.stepper.dt;
        write_file_atomic(dir / "mass.csv", "quantity,value\nmax_residual," + num(res) + "\nbound_10dt," +
                                                num(bound) + "\npass," + (res < bound ? "1" : "0") + "\n");
        s << "  mass residual " << num(res) << (res < bound ? " < " : " >= ") << "10 dt\n";
      } else if (which == "renorm") {
        write_report("renorm", renorm_continuity_residual(rec, Renormalization::z_log_z(), window, noise));
      } else if (which == "evf") {
        write_report("evf", effective_viscous_flux_report(rec, window, config.params, noise, d.evf_level,
                                                          d.evf_alpha));
      } else if (which == "korn") {
        double lo = INFINITY, hi = 0.0;
        int count = 0;
        for (const auto& st : rec.states) {
          const SpectralVectorField v = symmetry_project(st.u);
          if (sobolev12_sq(v) == 0.0) continue;
          const double r = korn_poincare_ratio(v, config.params);
          lo = std::min(lo, r);
          hi = std::max(hi, r);
          ++count;
        }
        write_file_atomic(dir / "korn.csv", "quantity,value\nstates," + std::to_string(count) + "\nmin_ratio," +
                                                num(count ? lo : NAN) + "\nmax_ratio," + num(count ? hi : NAN) + "\n");
        s << "  korn min ratio " << (count ? num(lo) : "n/a") << " over " << count << " states\n";
      } else if (which == "lower-bound") {
        const auto r = density_lower_bound(rec, d.lower_bound_from);
        write_file_atomic(dir / "lower_bound.csv",
                          "quantity,value\nobserved_min," + num(r.observed_min) + "\ncomparison_bound," +
                              num(r.comparison_bound) + "\nmeasured_D," + num(r.measured_D) + "\nequilibrium_mass," +
                              num(r.equilibrium_mass) + "\nratio," + num(r.ratio()) + "\n");
        s << "  lower bound: observed " << num(r.observed_min) << ", bound " << num(r.comparison_bound) << "\n";
      } else if (which == "ergodic") {
        const auto a = ergodic_velocity_average(rec, d.ergodic_horizon < 0.0 ? config.horizon : d.ergodic_horizon);
        std::string csv = "t,partial_average\n";
        for (std::size_t i = 0; i < a.times.size(); ++i) csv += num(a.times[i]) + "," + num(a.partial[i]) + "\n";
        write_file_atomic(dir / "ergodic.csv", csv);
        s << "  ergodic average " << num(a.average) << "\n";
      }
    }
    if (!health_ok(rec)) {
      ok[k] = 0;
      s << "  HARD INVARIANT FAILED (min rho " << rec.health.min_rho << ", symmetry defect "
        << rec.health.max_symmetry_defect << ")\n";
    }
    summary[k] = s.str();
  });
  log << "diagnose " << run_dir.string() << "\n";
  for (const auto& s : summary) log << s;
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; }) ? exit_ok : exit_invariant;
}

int cmd_stationarity(const RunConfig& config, const fs::path& out, int jobs, std::ostream& log) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const StationarityPlan plan = config.stationarity_plan();
  plan.validate();
  const auto& st = config.stationarity;
  const double horizon = config.stationarity_horizon();
  const auto M = static_cast<std::size_t>(st.members);
  write_config_copy(out, config);

  std::vector<MemberSamples> samples(M);
  std::vector<RunHealth> health(M);
  std::vector<char> ok(M, 1);
  // KB laws per functional: [functional][member] values over [b, b+T] and [b, b+2T].
  const std::size_t F = plan.functionals.size();
  std::vector<std::vector<std::vector<double>>> kb1(F, std::vector<std::vector<double>>(M)), kb2 = kb1;

  if (st.ramp_surrogate) {
    // Every member of the ramp is the same deterministic path.
    const auto ramp = ramp_surrogate_ensemble(config.grid, config.params, 1, horizon, config.stepper.dt,
                                              plan.keep_predicate(0.0, config.stepper.dt));
    const MemberSamples one = collect_member_samples(ramp.front(), plan);
    for (std::size_t k = 0; k < M; ++k) {
      samples[k] = one;
      health[k] = ramp.front().health;
    }
  } else {
    RunConfig run = config;
    run.horizon = horizon;
    parallel_for(M, jobs, [&](std::size_t k) {
      RecordOptions opt = run.record_options();
      opt.keep_step = plan.keep_predicate(0.0, run.stepper.dt);
      const TrajectoryRecord rec = simulate(run.initial_state(), horizon, run.params, run.noise_model(), run.stepper,
                                            run.seed, k, opt);
      samples[k] = collect_member_samples(rec, plan);
      health[k] = rec.health;
      ok[k] = health_ok(rec);
      if (st.kb_horizon > 0.0)
        for (std::size_t f = 0; f < F; ++f) {
          if (!plan.functionals[f].from_index) continue;
          const std::span<const TrajectoryRecord> one(&rec, 1);
          kb1[f][k] = krylov_bogoliubov_average(one, st.burn_in, st.kb_horizon, plan.functionals[f]).values;
          kb2[f][k] = krylov_bogoliubov_average(one, st.burn_in, 2.0 * st.kb_horizon, plan.functionals[f]).values;
        }
      const fs::path dir = out / member_dir(static_cast<int>(k));
      fs::create_directories(dir);
      write_trajectory_csv(dir / "trajectory.csv", rec);
      write_increments(dir / "increments.bin", rec);
    });
  }

  const StationarityReport rep = stationarity_report(std::span<const MemberSamples>(samples), plan);
  write_file_atomic(out / "stationarity.csv", rep.csv());
  std::string text = rep.text();
  if (st.ramp_surrogate) text = "ramp surrogate (negative control)\n" + text;
  if (st.kb_horizon > 0.0) {
    std::string csv = "functional,T,ks_distance\n";
    for (std::size_t f = 0; f < F; ++f) {
      if (!plan.functionals[f].from_index) continue;
      std::vector<double> a, b;
      for (std::size_t k = 0; k < M; ++k) {
        a.insert(a.end(), kb1[f][k].begin(), kb1[f][k].end());
        b.insert(b.end(), kb2[f][k].begin(), kb2[f][k].end());
      }
      if (a.empty() || b.empty()) continue;
      const double dist = ks_distance(a, b);
      csv += plan.functionals[f].name + "," + num(st.kb_horizon) + "," + num(dist) + "\n";
      text += "Krylov-Bogoliubov " + plan.functionals[f].name + ": KS([b,b+T],[b,b+2T]) = " + num(dist) + "\n";
    }
    write_file_atomic(out / "kb.csv", csv);
  }
  write_file_atomic(out / "stationarity.txt", text);

  Manifest manifest = base_manifest("stationarity", config);
  for (std::size_t k = 0; k < M; ++k) manifest.members.push_back(k);
  manifest.health = health;
  manifest.wall_seconds = elapsed(t0);
  manifest.files = inventory(out);
  write_manifest(out, manifest);
  log << text;
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; }) ? exit_ok : exit_invariant;
}

int cmd_sweep(const RunConfig& config, const fs::path& out, int jobs, std::ostream& log) {
  config.validate();
  const auto& sw = config.sweep;
  if (sw.values.empty()) throw ConfigError("sweep.values", "at least one value required");
  const auto t0 = std::chrono::steady_clock::now();
  write_config_copy(out, config);

  std::vector<RunConfig> cells;
  for (double v : sw.values) {
    RunConfig c = config;
    c.sweep.values.clear();
    if (sw.axis == "epsilon") c.params.epsilon = v;
    if (sw.axis == "delta") c.params.delta = v;
    if (sw.axis == "R") c.params.truncation_radius = v;
    if (sw.axis == "N") c.grid.galerkin_cutoff = static_cast<int>(v);
    c.validate();
    cells.push_back(c);
  }

  std::vector<CellStats> stats(cells.size());
  std::vector<char> ok(cells.size(), 1);
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const RunConfig& c = cells[i];
    const fs::path dir = out / ("cell_" + std::to_string(i));
    write_config_copy(dir, c);
    Manifest manifest = base_manifest("simulate", c);
    CellStats& s = stats[i];
    std::size_t mass_rows = 0;
    for (int k = 0; k < c.members; ++k) {
      const TrajectoryRecord rec = simulate_member(c, k);
      write_member(dir / member_dir(k), rec);
      manifest.members.push_back(static_cast<std::uint64_t>(k));
      manifest.health.push_back(rec.health);
      ok[i] = ok[i] && health_ok(rec);
      for (const auto& row : rec.index) {
        if (row.t < sw.burn_in - 0.5 * c.stepper.dt) continue;
        s.mass_mean += row.mass;
        ++mass_rows;
        s.energies.push_back(row.energy);
        s.min_rho = std::min(s.min_rho, row.min_rho);
      }
      for (std::size_t j = 0; j < rec.states.size(); ++j) {
        if (rec.times[j] < sw.burn_in - 0.5 * c.stepper.dt) continue;
        s.pressure_integral += integral(pressure(rec.states[j].rho, c.params));
        ++s.pressure_samples;
        const double tf = tail_fraction(rec.states[j].u);
        if (tf >= 0.0) {
          s.tail_fraction += tf;
          ++s.tail_samples;
        }
      }
    }
    s.mass_mean = mass_rows ? s.mass_mean / static_cast<double>(mass_rows) : NAN;
    s.pressure_integral = s.pressure_samples ? s.pressure_integral / s.pressure_samples : NAN;
    s.tail_fraction = s.tail_samples ? s.tail_fraction / s.tail_samples : NAN;
    manifest.files = inventory(dir);
    write_manifest(dir, manifest);
  });

  std::string csv =
      "axis,value,M_eps,mass_mean,energy_q10,energy_q50,energy_q90,pressure_integral,min_rho,tail_fraction\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto& s = stats[i];
    const double me = c.params.epsilon > 0.0 ? solve_M_epsilon(c.params.epsilon, c.params.total_mass) : NAN;
    csv += sw.axis + "," + num(sw.values[i]) + "," + num(me) + "," + num(s.mass_mean) + "," +
           num(quantile(s.energies, 0.1)) + "," + num(quantile(s.energies, 0.5)) + "," +
           num(quantile(s.energies, 0.9)) + "," + num(s.pressure_integral) + "," + num(s.min_rho) + "," +
           num(s.tail_fraction) + "\n";
  }
  write_file_atomic(out / "sweep.csv", csv);

  Manifest manifest = base_manifest("sweep", config);
  manifest.wall_seconds = elapsed(t0);
  manifest.files = inventory(out);
  write_manifest(out, manifest);
  log << "sweep over " << sw.axis << " (" << cells.size() << " cells) -> " << (out / "sweep.csv").string() << "\n"
      << csv;
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; }) ? exit_ok : exit_invariant;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.field() << ": " << e.constraint() << "\n";
    return exit_validation;
  } catch (const ResolutionError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_validation;
  } catch (const IoError& e) {
    err << "artifact error: " << e.what() << "\n";
    return exit_validation;
  } catch (const WindowError& e) {
    err << "window error: " << e.what() << "\n";
    return exit_validation;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return exit_validation;
  } catch (const Error& e) {
    err << "solver failure: " << e.what() << "\n";
    return exit_solver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_solver;
  }
}

}  // namespace scns
