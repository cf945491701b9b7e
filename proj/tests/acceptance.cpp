// Acceptance suite: one PASS/FAIL line per criterion at desk scale
// (d = 2, n = 32, N = 7, K = 8 noise modes, ensembles of 16).
// Usage: scns_acceptance [--report=<file>] [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "oracles.hpp"
#include "scns/config.hpp"
#include "scns/errors.hpp"
#include "scns/harness.hpp"
#include "scns/io.hpp"
#include "scns/spectral.hpp"

using namespace scns;
namespace fs = std::filesystem;
using Point = std::array<double, 3>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Desk configuration: library defaults.
RunConfig desk() {
  RunConfig c = parse_config("");
  c.validate();
  return c;
}

RecordOptions index_only() {
  RecordOptions o;
  o.state_stride = 1 << 30;
  return o;
}

double max_diff(const SpectralField& a, const SpectralField& b) {
  const auto sa = samples_of(a), sb = samples_of(b);
  double m = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) m = std::max(m, std::abs(sa[i] - sb[i]));
  return m;
}

SpectralField random_field(const TorusGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> s(g.size());
  for (auto& v : s) v = nd(rng);
  return SpectralField::from_samples(g, s);
}

double oracle_M_eps(double eps, double M0) {
  return oracle::bisect([&](double m) { return 2.0 * eps * m - oracle::cutoff(m / M0); }, 0.0, M0);
}

// 1 ------------------------------------------------------------------------
Outcome mass_ode() {
  RunConfig c = desk();
  const auto t0 = std::chrono::steady_clock::now();
  const auto rec = simulate(c.initial_state(), 10.0, c.params, c.noise_model(), c.stepper, c.seed, 0, index_only());
  const double runtime = seconds_since(t0);
  // Independent RK4 of dM/dt = −2εM + H(M/M₀) between index rows.
  auto f = [&](double m) { return -2.0 * c.params.epsilon * m + oracle::cutoff(m / c.params.total_mass); };
  double y = rec.index.front().mass, worst = 0.0;
  for (std::size_t i = 1; i < rec.index.size(); ++i) {
    y = oracle::rk4(f, y, rec.index[i].t - rec.index[i - 1].t, 4);
    worst = std::max(worst, std::abs(rec.index[i].mass - y));
  }
  const double bound = 10.0 * c.stepper.dt;
  const double lib = mass_ode_residual(rec, c.params);
  return {worst < bound && runtime < 60.0 && std::abs(lib - worst) < 1e-9,
          "max|M - M_ode| = " + fmt("%.3e", worst) + " < 10dt = " + fmt("%.0e", bound) + ", library " +
              fmt("%.3e", lib) + ", runtime " + fmt("%.1f s", runtime)};
}

// 2 ------------------------------------------------------------------------
Outcome mass_equilibrium() {
  RunConfig c = desk();
  c.params.epsilon = 0.1;
  auto opt = index_only();
  opt.index_stride = 1000;
  const auto rec = simulate(c.initial_state(), 50.0, c.params, c.noise_model(), c.stepper, c.seed, 0, opt);
  const double Me = oracle_M_eps(0.1, c.params.total_mass);
  const double err = std::abs(rec.index.back().mass - Me);
  const bool lib_ok = std::abs(solve_M_epsilon(0.1, c.params.total_mass) - Me) < 1e-12;
  const bool exact = solve_M_epsilon(0.5, 1.0) == 0.5;
  return {std::abs(rec.index.back().t - 50.0) < 1e-9 && err < 1e-3 && lib_ok && exact,
          "|M(50) - M_eps| = " + fmt("%.3e", err) + " (M_eps = " + fmt("%.9f", Me) + "), M_0.5 = " +
              fmt("%.17g", solve_M_epsilon(0.5, 1.0))};
}

// 3 ------------------------------------------------------------------------
Outcome symmetry() {
  RunConfig c = desk();
  c.initial = "acoustic";
  const auto t0 = std::chrono::steady_clock::now();
  const State s0 = c.initial_state();
  RecordOptions opt = index_only();
  opt.track_symmetry = true;
  const auto rec = simulate(s0, 1000 * c.stepper.dt, c.params, c.noise_model(), c.stepper, c.seed, 0, opt);
  const double runtime = seconds_since(t0);
  const double end = symmetry_defect(rec.states.back().rho, rec.states.back().u);
  const double worst = std::max(end, rec.health.max_symmetry_defect);
  return {rec.steps.back() == 1000 && symmetry_defect(s0.rho, s0.u) < 1e-14 && worst < 1e-10 && runtime < 120.0 &&
              max_abs(s0.u[0]) > 0.0,
          "defect after 1000 steps " + fmt("%.2e", end) + ", max along path " +
              fmt("%.2e", rec.health.max_symmetry_defect) + ", runtime " + fmt("%.1f s", runtime)};
}

// 4 ------------------------------------------------------------------------
Outcome energy_balance() {
  RunConfig c = desk();
  c.initial = "acoustic";
  const double T = 0.5;
  const double dts[3] = {4e-3, 2e-3, 1e-3};
  std::string detail = "noise-off |res|:";
  double quiet[3];
  for (int i = 0; i < 3; ++i) {
    StepperConfig sc = c.stepper;
    sc.dt = dts[i];
    const auto rec = simulate(c.initial_state(), T, c.params, NoiseModel::none(), sc, c.seed, 0, index_only());
    quiet[i] = std::abs(energy_balance_residual(rec, {0.0, T}, c.params, NoiseModel::none()).residual);
    detail += " " + fmt("%.3e", quiet[i]);
  }
  const double r1 = quiet[0] / quiet[1], r2 = quiet[1] / quiet[2];
  bool ok = r1 >= 1.5 && r1 <= 3.0 && r2 >= 1.5 && r2 <= 3.0;
  detail += " (ratios " + fmt("%.2f", r1) + ", " + fmt("%.2f", r2) + ")";

  // Noisy: 16 members, each coarse path the sum of the finest one.
  const NoiseModel noise = c.noise_model();
  const int K = noise.size();
  const int members = 16;
  const auto fine_steps = static_cast<std::int64_t>(std::llround(T / dts[2]));
  double mean[3] = {0, 0, 0};
  for (int m = 0; m < members; ++m) {
    const WienerPath w(c.seed, static_cast<std::uint64_t>(m), K, dts[2]);
    std::vector<double> fine;
    for (std::int64_t s = 0; s < fine_steps; ++s) {
      const auto inc = w.increments(s);
      fine.insert(fine.end(), inc.begin(), inc.end());
    }
    for (int i = 0; i < 3; ++i) {
      const int group = static_cast<int>(std::llround(dts[i] / dts[2]));
      std::vector<double> inc(static_cast<std::size_t>(fine_steps / group * K), 0.0);
      for (std::int64_t s = 0; s < fine_steps; ++s)
        for (int k = 0; k < K; ++k)
          inc[static_cast<std::size_t>(s / group * K + k)] += fine[static_cast<std::size_t>(s * K + k)];
      StepperConfig sc = c.stepper;
      sc.dt = dts[i];
      const auto rec = simulate_with_increments(c.initial_state(), T, c.params, noise, sc, inc, c.seed,
                                                static_cast<std::uint64_t>(m), index_only());
      mean[i] += std::abs(energy_balance_residual(rec, {0.0, T}, c.params, noise).residual) / members;
    }
  }
  ok = ok && mean[1] < mean[0] && mean[2] < mean[1];
  detail += "; noisy ensemble mean |res|: " + fmt("%.3e", mean[0]) + " " + fmt("%.3e", mean[1]) + " " +
            fmt("%.3e", mean[2]);
  return {ok, detail};
}

// 5 ------------------------------------------------------------------------
Outcome spectral_exactness() {
  const TorusGrid g = desk().grid;
  std::mt19937_64 rng(2024);
  double lap = 0.0, trace = 0.0, conv_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_field(g, rng);
    const auto centred = f - SpectralField::constant(g, mean(f));
    lap = std::max(lap, max_diff(laplacian(inv_laplacian(f)), centred));
    const auto R = riesz_double(f);
    SpectralField tr = R(0, 0);
    for (int a = 1; a < g.dim; ++a) tr = tr + R(a, a);
    trace = std::max(trace, max_diff(tr, centred));
  }
  // Mode-convolution oracle for band-limited factors whose product stays below Nyquist.
  for (int trial = 0; trial < 2; ++trial) {
    const int band = g.n / 4 - 1;
    const auto a = to_modes(oracle::random_band_limited(g, band, rng));
    const auto b = to_modes(oracle::random_band_limited(g, band, rng));
    std::vector<oracle::cplx> conv(g.size(), {0.0, 0.0});
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        const auto mi = g.unravel(i), mj = g.unravel(j);
        std::array<int, 3> h{0, 0, 0};
        bool inside = true;
        for (int ax = 0; ax < g.dim; ++ax) {
          const int s = g.signed_mode(mi[ax]) + g.signed_mode(mj[ax]);
          if (s <= -g.n / 2 || s >= g.n / 2) inside = false;
          h[ax] = (s + g.n) % g.n;
        }
        if (inside) conv[g.ravel(h)] += a.modes()[i] * b.modes()[j];
      }
    const auto p = to_modes(dealias_product(a, b));
    for (std::size_t i = 0; i < g.size(); ++i) conv_err = std::max(conv_err, std::abs(p.modes()[i] - conv[i]));
  }
  return {lap < 1e-12 && trace < 1e-12 && conv_err < 1e-12,
          "Lap(Lap^-1 f) " + fmt("%.1e", lap) + ", Riesz trace " + fmt("%.1e", trace) + ", dealiased product " +
              fmt("%.1e", conv_err)};
}

// 6 ------------------------------------------------------------------------
Outcome positivity() {
  RunConfig c = desk();
  RecordOptions opt;
  opt.state_stride = 10;
  const auto rec = simulate(c.initial_state(), 20.0, c.params, c.noise_model(), c.stepper, c.seed, 0, opt);
  double floor = INFINITY;
  for (const auto& row : rec.index)
    if (row.t >= 1.0 - 1e-9) floor = std::min(floor, row.min_rho);
  const auto rep = density_lower_bound(rec, 1.0);
  const double ratio = floor / rep.comparison_bound;
  return {rec.health.positivity_ok && floor > 0.0 && ratio >= 0.1 && ratio <= 10.0,
          "min rho on [1,20] = " + fmt("%.4f", floor) + ", comparison bound " + fmt("%.4f", rep.comparison_bound) +
              " (D = " + fmt("%.3f", rep.measured_D) + "), ratio " + fmt("%.2f", ratio)};
}

// 7 ------------------------------------------------------------------------
Outcome korn() {
  const RunConfig c = desk();
  const TorusGrid& g = c.grid;
  std::mt19937_64 rng(77);
  double lo = INFINITY, scale_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    SpectralVectorField v = SpectralVectorField::zeros(g);
    for (int i = 0; i < g.dim; ++i) v[i] = oracle::random_band_limited(g, g.galerkin_cutoff, rng);
    v = symmetry_project(v);
    const double r = korn_poincare_ratio(v, c.params);
    lo = std::min(lo, r);
    for (double s : {1e-3, 2.5, 1e3}) scale_err = std::max(scale_err, std::abs(korn_poincare_ratio(s * v, c.params) - r) / r);
  }
  return {lo > 0.0 && scale_err <= 1e-12,
          "min ratio " + fmt("%.4f", lo) + " over 100 fields, scale error " + fmt("%.1e", scale_err)};
}

// 8 ------------------------------------------------------------------------
Outcome krylov_bogoliubov() {
  RunConfig c = desk();
  const double burn = 50.0, T = 100.0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rec = simulate(c.initial_state(), burn + 2 * T, c.params, c.noise_model(), c.stepper, c.seed, 0,
                            index_only());
  const std::span<const TrajectoryRecord> one(&rec, 1);
  const auto E = functionals::energy(c.params);
  const auto a = krylov_bogoliubov_average(one, burn, T, E);
  const auto b = krylov_bogoliubov_average(one, burn, 2 * T, E);
  const double d = ks_distance(a, b);
  const double runtime = seconds_since(t0);
  return {d < 0.05 && runtime < 300.0,
          "KS(energy law on [50,150], [50,250]) = " + fmt("%.4f", d) + ", runtime " + fmt("%.0f s", runtime)};
}

// 9 ------------------------------------------------------------------------
Outcome stationarity() {
  RunConfig c = desk();
  const StationarityPlan plan = c.stationarity_plan();
  const double horizon = c.stationarity_horizon();
  const auto M = static_cast<std::size_t>(c.stationarity.members);
  std::vector<MemberSamples> samples(M);
  RecordOptions opt = index_only();
  opt.keep_step = plan.keep_predicate(0.0, c.stepper.dt);
  for (std::size_t k = 0; k < M; ++k) {
    const auto rec = simulate(c.initial_state(), horizon, c.params, c.noise_model(), c.stepper, c.seed, k, opt);
    samples[k] = collect_member_samples(rec, plan);
  }
  const auto rep = stationarity_report(std::span<const MemberSamples>(samples), plan);
  bool ok = rep.sample_size == M * static_cast<std::size_t>(plan.samples_per_member);
  std::string detail = "n = " + std::to_string(rep.sample_size) + ", 1% critical value " + fmt("%.4f", rep.threshold) + ";";
  for (const auto& f : {"mass", "energy", "velocity_norm"}) {
    int cells = 0;
    for (const auto& cell : rep.cells)
      if (cell.functional == f && cell.view == "D2") {
        ok = ok && cell.distance < rep.threshold;
        ++cells;
      }
    ok = ok && cells == 3;
    detail += std::string(" ") + f + " max " + fmt("%.4f", rep.max_distance(f, "D2"));
  }

  // Ramp control. Pooled over j, a monotone ramp interleaves t + jΔ with
  // t + τ + jΔ, so the distance-1 check uses the per-time marginal laws.
  const auto ramp = ramp_surrogate_ensemble(c.grid, c.params, 1, horizon, c.stepper.dt,
                                            plan.keep_predicate(0.0, c.stepper.dt));
  const std::vector<MemberSamples> pooled(M, collect_member_samples(ramp.front(), plan));
  const auto ctl = stationarity_report(std::span<const MemberSamples>(pooled), plan);
  StationarityPlan marginal = plan;
  marginal.samples_per_member = 1;
  const std::vector<MemberSamples> single(M, collect_member_samples(ramp.front(), marginal));
  const auto ctl1 = stationarity_report(std::span<const MemberSamples>(single), marginal);
  int ones = 0;
  for (const auto& cell : ctl1.cells)
    if (cell.functional == "mass" && cell.view == "D2" && cell.distance == 1.0) ++ones;
  ok = ok && ones == 3 && ctl.verdict == Verdict::fail && ctl1.verdict == Verdict::fail;
  detail += "; ramp control: marginal mass distance 1 at " + std::to_string(ones) + "/3 lags, pooled verdict " +
            to_string(ctl.verdict) + " (max " + fmt("%.3f", ctl.max_distance("mass", "D2")) + ")";
  return {ok, detail};
}

// 10 -----------------------------------------------------------------------
bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
           return std::memcmp(&x, &y, sizeof x) == 0;
         });
}

bool same_state(const State& a, const State& b) {
  if (!same_bits(a.rho.samples(), b.rho.samples())) return false;
  for (int i = 0; i < a.grid().dim; ++i)
    if (!same_bits(a.u[i].samples(), b.u[i].samples())) return false;
  return true;
}

Outcome appendix_machinery() {
  RunConfig c = desk();
  c.initial = "acoustic";
  c.initial_amplitude = 0.2;
  StepperConfig sc = c.stepper;
  RecordOptions opt;
  opt.state_stride = 10;
  const auto noisy = simulate(c.initial_state(), 1.0, c.params, c.noise_model(), sc, c.seed, 0, opt);
  const auto emb = piecewise_embed(noisy.states, 10 * sc.dt);
  const double iso = std::abs(emb.discrete_sum - emb.path_integral) / emb.discrete_sum;

  RecordOptions every;
  const auto smooth = simulate(c.initial_state(), 1.0, c.params, NoiseModel::none(), sc, c.seed, 0, every);
  const auto E = functionals::energy(c.params);
  const double direct = E(smooth.states[*smooth.find_time(0.5)]);
  double prev = INFINITY;
  bool decreasing = true;
  std::string errs;
  for (int m : {4, 16, 64}) {
    const double err = std::abs(mollified_evaluation(smooth, 0.5, m, E) - direct);
    decreasing = decreasing && err < prev;
    prev = err;
    errs += " " + fmt("%.2e", err);
  }

  const auto a = shift(shift(noisy, 0.2), 0.3);
  const auto b = shift(noisy, 0.5);
  bool bitwise = a.sample_count() == b.sample_count() && a.increments == b.increments;
  for (std::size_t i = 0; bitwise && i < b.sample_count(); ++i)
    bitwise = same_state(a.states[i], b.states[i]) && same_state(b.states[i], noisy.states[i + 50]);
  return {emb.isometric && iso <= 1e-12 && decreasing && bitwise,
          "embed isometry " + fmt("%.1e", iso) + ", mollified errors m=4,16,64:" + errs + ", shift semigroup " +
              (bitwise ? "bitwise" : "differs")};
}

// 11 -----------------------------------------------------------------------
Outcome effective_viscous_flux() {
  RunConfig c = desk();
  const TorusGrid& g = c.grid;
  const double kw = oracle::pi;  // 2π/L
  ModelParams p = c.params;
  p.eta = 0.25;
  p.delta = 0.05;
  p.Gamma = 6.0;
  p.truncation_radius = 1e3;
  // ρ = 1 + 0.3 cos(πx)cos(πy), u = (0.5 sin(πx), 0): single-mode data.
  auto rho_fn = [&](const Point& x) { return 1.0 + 0.3 * std::cos(kw * x[0]) * std::cos(kw * x[1]); };
  auto u_fn = [&](const Point& x) { return 0.5 * std::sin(kw * x[0]); };
  SpectralVectorField u = SpectralVectorField::zeros(g);
  u[0] = SpectralField::from_function(g, u_fn);
  const State s = make_state(0.0, SpectralField::from_function(g, rho_fn), u);
  const auto r = effective_viscous_flux_rates(s, p, NoiseModel::none(), {}, FluxLevel::epsilon);
  auto term = [&](const std::string& n) {
    for (const auto& t : r.terms)
      if (t.name == n) return t.value;
    throw std::runtime_error("missing term " + n);
  };
  auto quad = [&](const std::function<double(const Point&)>& f) { return oracle::refined_integral(g, f, 128); };
  auto rel = [](double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); };
  const double rbar = quad(rho_fn) / g.volume();
  double worst = 0.0;
  worst = std::max(worst, rel(term("pressure"), quad([&](const Point& x) {
                     return p.a * std::pow(rho_fn(x), p.gamma) * (rho_fn(x) - rbar);
                   })));
  worst = std::max(worst, rel(term("artificial_pressure"), quad([&](const Point& x) {
                     return p.delta * std::pow(rho_fn(x), p.Gamma) * (rho_fn(x) - rbar);
                   })));
  // div u = 0.5π cos(πx); viscous term −(4/3μ + η)∫div u (ρ − ρ̄).
  worst = std::max(worst, rel(term("viscous"), quad([&](const Point& x) {
                     return -(4.0 / 3.0 * p.mu + p.eta) * 0.5 * kw * std::cos(kw * x[0]) * (rho_fn(x) - rbar);
                   })));
  worst = std::max(worst, rel(r.boundary, quad([&](const Point& x) {
                     const double cc = 0.3 / (2 * kw);
                     return rho_fn(x) * u_fn(x) * cc * std::sin(kw * x[0]) * std::cos(kw * x[1]);
                   })));

  // Generic data with noise off: the time-integrated identity closes at first order.
  RunConfig gen = c;
  gen.initial = "acoustic";
  gen.initial_amplitude = 0.1;
  double prev = INFINITY;
  bool decreasing = true;
  std::string res;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    StepperConfig sc = gen.stepper;
    sc.dt = dt;
    const auto rec = simulate(gen.initial_state(), 0.2, gen.params, NoiseModel::none(), sc, gen.seed);
    const double v = std::abs(
        effective_viscous_flux_report(rec, {0.0, 0.2}, gen.params, NoiseModel::none(), FluxLevel::epsilon).residual);
    decreasing = decreasing && v < prev;
    prev = v;
    res += " " + fmt("%.2e", v);
  }

  bool rejects = true;
  for (double a : {1.0 / 3.0, 0.5}) {
    try {
      effective_viscous_flux_rates(s, p, NoiseModel::none(), {}, FluxLevel::delta, a);
      rejects = false;
    } catch (const DomainError&) {
    }
    RunConfig bad = c;
    bad.diagnostics.evf_level = FluxLevel::delta;
    bad.diagnostics.evf_alpha = a;
    try {
      bad.validate();
      rejects = false;
    } catch (const ConfigError& e) {
      rejects = rejects && e.field() == "diagnostics.evf_alpha";
    }
  }
  return {worst < 1e-8 && decreasing && rejects,
          "single-mode max rel error " + fmt("%.1e", worst) + ", residual dt=4e-3,2e-3,1e-3:" + res +
              ", alpha >= 1/3 " + (rejects ? "rejected" : "accepted")};
}

// 12 -----------------------------------------------------------------------
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / ("scns_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  RunConfig c = desk();
  c.horizon = 1.0;
  c.members = 2;
  c.diagnostics.which = {"energy", "mass", "renorm", "korn", "lower-bound", "ergodic", "evf"};
  RunConfig st = desk();
  st.stationarity.members = 4;
  st.stationarity.burn_in = 1.0;
  st.stationarity.tau_list = {0.5};
  st.stationarity.samples_per_member = 4;
  st.stationarity.sample_spacing = 0.25;
  std::ostringstream log;
  for (const char* run : {"a", "b"}) {
    if (cmd_simulate(c, root / run / "sim", 1, log) != exit_ok) return {false, "simulate failed"};
    if (cmd_diagnose(root / run / "sim", c.diagnostics, 1, log) != exit_ok) return {false, "diagnose failed"};
    if (cmd_stationarity(st, root / run / "stat", 1, log) != exit_ok) return {false, "stationarity failed"};
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    const fs::path other = root / "b" / fs::relative(e.path(), root / "a");
    ++compared;
    if (!fs::exists(other) || read_file(e.path()) != read_file(other)) ++differing;
  }
  fs::remove_all(root);
  return {compared > 20 && differing == 0,
          std::to_string(compared) + " trajectory, snapshot and report files compared, " +
              std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mass ODE fidelity", mass_ode},
      {"mass equilibrium", mass_equilibrium},
      {"symmetry preservation", symmetry},
      {"discrete energy balance", energy_balance},
      {"spectral operator exactness", spectral_exactness},
      {"density positivity", positivity},
      {"Korn-Poincare", korn},
      {"Krylov-Bogoliubov stabilization", krylov_bogoliubov},
      {"stationarity report", stationarity},
      {"appendix machinery", appendix_machinery},
      {"effective viscous flux", effective_viscous_flux},
      {"reproducibility", reproducibility},
  };
  std::set<int> only;
  std::FILE* report = nullptr;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--report=", 0) == 0)
      report = std::fopen(arg.substr(9).c_str(), "w");
    else
      only.insert(std::atoi(argv[i]));
  }

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    for (std::FILE* out : {stdout, report}) {
      if (!out) continue;
      std::fprintf(out, "%s %2d %-32s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                   o.detail.c_str(), seconds_since(t0));
      std::fflush(out);
    }
  }
  if (report) std::fclose(report);
  return failures == 0 ? 0 : 1;
}
