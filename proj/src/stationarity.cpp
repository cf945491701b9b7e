#include "scns/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "scns/errors.hpp"
#include "scns/spectral.hpp"

namespace scns {

namespace functionals {

namespace {
Functional from_row(std::string name, const ModelParams& params, double IndexRow::*field) {
  Functional f;
  f.name = std::move(name);
  f.map = [params, field](const State& s) { return index_row(s, params).*field; };
  f.from_index = [field](const IndexRow& r) { return r.*field; };
  return f;
}
}  // namespace

Functional mass() { return from_row("mass", ModelParams{}, &IndexRow::mass); }
Functional energy(const ModelParams& params) { return from_row("energy", params, &IndexRow::energy); }
Functional velocity_norm() { return from_row("velocity_norm", ModelParams{}, &IndexRow::sobolev12_sq); }
Functional min_density() { return from_row("min_rho", ModelParams{}, &IndexRow::min_rho); }

Functional mode_amplitude(int component, const std::array<int, 3>& mode) {
  Functional f;
  f.name = "mode:" + std::to_string(component);
  for (int a = 0; a < 3; ++a) f.name += ":" + std::to_string(mode[a]);
  f.map = [component, mode](const State& s) {
    const TorusGrid& g = s.grid();
    if (component < 0 || component >= g.dim) throw DomainError("mode functional: component out of range");
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) idx[a] = ((mode[a] % g.n) + g.n) % g.n;
    return std::abs(modes_of(s.u[component])[g.ravel(idx)]);
  };
  return f;
}

}  // namespace functionals

Functional functional_by_name(const std::string& name, const ModelParams& params) {
  if (name == "mass") return functionals::mass();
  if (name == "energy") return functionals::energy(params);
  if (name == "velocity_norm") return functionals::velocity_norm();
  if (name == "min_rho") return functionals::min_density();
  if (name.rfind("mode:", 0) == 0) {
    std::vector<int> parts;
    std::stringstream ss(name.substr(5));
    std::string item;
    try {
      while (std::getline(ss, item, ':')) parts.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("stationarity.functionals", "malformed mode functional '" + name + "'");
    }
    if (parts.size() < 3 || parts.size() > 4)
      throw ConfigError("stationarity.functionals", "mode functional needs mode:<c>:<m1>:<m2>[:<m3>]");
    std::array<int, 3> m{parts[1], parts[2], parts.size() == 4 ? parts[3] : 0};
    return functionals::mode_amplitude(parts[0], m);
  }
  throw ConfigError("stationarity.functionals", "unknown functional '" + name + "'");
}

TrajectoryRecord shift(const TrajectoryRecord& record, double tau) {
  if (!(tau >= 0.0)) throw DomainError("shift requires τ ≥ 0");
  if (record.times.empty()) throw WindowError("shift of an empty record");
  const auto j = record.find_time(record.times.front() + tau);
  if (!j) throw WindowError("shift: no sample at t₀ + τ (τ beyond record or not on the sample grid)");
  TrajectoryRecord out;
  out.grid = record.grid;
  out.params = record.params;
  out.dt = record.dt;
  out.stride = record.stride;
  out.seed = record.seed;
  out.member = record.member;
  out.noise_modes = record.noise_modes;
  out.symmetric = record.symmetric;
  out.max_retries = record.max_retries;
  out.health = record.health;

  const double offset = record.times[*j] - record.times.front();
  const std::int64_t drop = record.steps[*j] - record.steps.front();
  for (std::size_t i = *j; i < record.states.size(); ++i) {
    out.times.push_back(record.times[i] - offset);
    out.steps.push_back(record.steps[i] - drop);
    out.states.push_back(record.states[i]);
    out.states.back().t = out.times.back();
  }
  const auto K = static_cast<std::size_t>(record.noise_modes);
  const auto first = std::min(record.increments.size(), static_cast<std::size_t>(drop) * K);
  out.increments.assign(record.increments.begin() + static_cast<std::ptrdiff_t>(first), record.increments.end());
  const double tol = 0.5 * record.dt;
  for (const auto& row : record.index) {
    if (row.t < record.times[*j] - tol) continue;
    out.index.push_back(row);
    out.index.back().t -= offset;
  }
  return out;
}

namespace {

const State& state_at(const TrajectoryRecord& r, double t) {
  const auto i = r.find_time(t);
  if (!i) throw WindowError("record has no sample at t = " + std::to_string(t));
  return r.states[*i];
}

}  // namespace

EmpiricalLaw marginal_law_samples(std::span<const TrajectoryRecord> ensemble, double t, const Functional& f) {
  EmpiricalLaw law;
  law.name = f.name;
  for (const auto& r : ensemble) law.values.push_back(f(state_at(r, t)));
  return law;
}

double mollifier(double s, int m) {
  const double x = m * s;
  if (std::abs(x) >= 1.0) return 0.0;
  const double b = 1.0 - x * x;
  return 15.0 * m / 16.0 * b * b;
}

State mollified_state(const TrajectoryRecord& record, double t, int m, int node_stride) {
  if (m < 1) throw DomainError("mollifier index m must be ≥ 1");
  if (record.times.empty()) throw WindowError("empty record");
  const double r = 1.0 / m;
  const double tol = 0.5 * record.dt;
  if (t - r < record.times.front() - tol || t + r > record.times.back() + tol)
    throw WindowError("mollifier support [t − 1/m, t + 1/m] leaves the record");

  const auto lo = std::lower_bound(record.times.begin(), record.times.end(), t - r);
  const auto hi = std::upper_bound(record.times.begin(), record.times.end(), t + r);
  std::vector<std::size_t> idx;
  std::vector<double> w;
  double total = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const double wi = mollifier(t - *it, m);
    if (wi <= 0.0) continue;
    if (node_stride > 1 && std::llround((*it - t) / record.dt) % node_stride != 0) continue;
    idx.push_back(static_cast<std::size_t>(it - record.times.begin()));
    w.push_back(wi);
    total += wi;
  }
  if (idx.empty()) throw WindowError("no stored sample inside the mollifier support");

  // Anchor at the sample nearest t and add weighted differences, so a window of
  // identical states reproduces the anchor exactly.
  std::size_t anchor = idx.front();
  for (std::size_t i : idx)
    if (std::abs(record.times[i] - t) < std::abs(record.times[anchor] - t)) anchor = i;
  const State& a = record.states[anchor];
  auto average = [&](auto get) -> std::optional<SpectralField> {
    const auto base = get(a).samples();
    std::vector<double> acc(base.size(), 0.0);
    bool moved = false;
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const auto s = get(record.states[idx[q]]).samples();
      const double wq = w[q] / total;
      for (std::size_t p = 0; p < acc.size(); ++p) {
        const double d = s[p] - base[p];
        if (d != 0.0) moved = true;
        acc[p] += wq * d;
      }
    }
    if (!moved) return std::nullopt;
    for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += base[p];
    return SpectralField::from_samples(a.grid(), std::move(acc));
  };
  State out = a;
  out.t = t;
  bool changed = false;
  if (auto rho = average([](const State& s) -> const SpectralField& { return s.rho; })) {
    out.rho = *rho;
    changed = true;
  }
  for (int c = 0; c < a.grid().dim; ++c)
    if (auto uc = average([c](const State& s) -> const SpectralField& { return s.u[c]; })) {
      out.u[c] = *uc;
      changed = true;
    }
  if (changed) out.q = scale_pointwise(out.rho, out.u);
  return out;
}

double mollified_evaluation(const TrajectoryRecord& record, double t, int m, const Functional& f,
                            int node_stride) {
  return f(mollified_state(record, t, m, node_stride));
}

const State& PiecewisePath::at(double t) const {
  if (samples.empty() || t < t0 || t >= end()) throw DomainError("path evaluated outside its domain");
  const auto i = std::min(samples.size() - 1, static_cast<std::size_t>((t - t0) / dt));
  return samples[i];
}

double state_norm(const State& s) { return std::sqrt(inner(s.rho, s.rho) + inner(s.u, s.u)); }

EmbedResult piecewise_embed(std::span<const State> samples, double dt, double t0) {
  if (samples.empty()) throw DomainError("piecewise_embed needs at least one sample");
  if (!(dt > 0.0)) throw DomainError("piecewise_embed needs Δt > 0");
  EmbedResult out;
  out.path.samples.assign(samples.begin(), samples.end());
  out.path.t0 = t0;
  out.path.dt = dt;
  for (const auto& s : samples) out.discrete_sum += state_norm(s) * dt;
  // Composite midpoint rule with four nodes per cell, evaluated through the path.
  constexpr int nodes = 4;
  const double h = dt / nodes;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (int q = 0; q < nodes; ++q) {
      const double t = t0 + dt * static_cast<double>(i) + h * (q + 0.5);
      out.path_integral += state_norm(out.path.at(t)) * h;
    }
  const double scale = std::max(std::abs(out.discrete_sum), 1e-300);
  out.isometric = std::abs(out.discrete_sum - out.path_integral) <= 1e-12 * scale;
  return out;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS distance of an empty law");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_distance(const EmpiricalLaw& a, const EmpiricalLaw& b) { return ks_distance(a.values, b.values); }

double ks_critical_value(std::size_t n1, std::size_t n2, double alpha, int permutations, std::uint64_t seed) {
  if (n1 == 0 || n2 == 0) throw DomainError("KS critical value needs non-empty samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("α must lie in (0, 1)");
  if (permutations < 1) throw DomainError("at least one permutation required");
  std::mt19937_64 rng(seed);
  std::vector<double> pool(n1 + n2);
  std::iota(pool.begin(), pool.end(), 0.0);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(permutations));
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(pool.begin(), pool.end(), rng);
    stats.push_back(ks_distance(std::span(pool).first(n1), std::span(pool).subspan(n1)));
  }
  std::sort(stats.begin(), stats.end(), std::greater<>());
  // Walk distinct values from the top; keep the smallest whose upper tail is ≤ α.
  double critical = std::nextafter(stats.front(), 2.0);
  std::size_t i = 0;
  while (i < stats.size()) {
    const double v = stats[i];
    while (i < stats.size() && stats[i] == v) ++i;
    if (static_cast<double>(i) / static_cast<double>(stats.size()) > alpha) break;
    critical = v;
  }
  return critical;
}

void StationarityPlan::validate() const {
  if (functionals.empty()) throw ConfigError("stationarity.functionals", "at least one functional required");
  if (t_list.empty()) throw ConfigError("stationarity.t_list", "at least one base time required");
  if (tau_list.empty()) throw ConfigError("stationarity.tau_list", "at least one shift τ required");
  for (double tau : tau_list)
    if (!(tau >= 0.0)) throw ConfigError("stationarity.tau_list", "τ ≥ 0 required");
  if (samples_per_member < 1) throw ConfigError("stationarity.samples_per_member", "must be ≥ 1");
  if (samples_per_member > 1 && !(sample_spacing > 0.0))
    throw ConfigError("stationarity.sample_spacing", "must be > 0");
  if (mollifier_m < 1) throw ConfigError("stationarity.mollifier_m", "must be ≥ 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("stationarity.alpha", "α ∈ (0, 1) required");
  if (permutations < 1) throw ConfigError("stationarity.permutations", "must be ≥ 1");
  if (mollifier_stride < 0) throw ConfigError("stationarity.mollifier_stride", "must be ≥ 0");
}

int StationarityPlan::mollifier_node_stride(double dt) const {
  if (mollifier_stride > 0) return mollifier_stride;
  return std::max(1, static_cast<int>(std::floor(2.0 / mollifier_m / dt / 64.0)));
}

std::vector<std::int64_t> StationarityPlan::required_steps(double t_start, double dt) const {
  std::vector<std::int64_t> out;
  auto step_of = [&](double t) { return std::llround((t - t_start) / dt); };
  const auto reach = static_cast<std::int64_t>(std::ceil(1.0 / mollifier_m / dt));
  const int q = mollifier_node_stride(dt);
  auto add_point = [&](double t) {
    const std::int64_t c = step_of(t);
    out.push_back(c);
    if (d1_view)
      for (std::int64_t k = -(reach / q); k <= reach / q; ++k)
        if (c + k * q >= 0) out.push_back(c + k * q);
  };
  out.push_back(0);
  for (double tau : tau_list) out.push_back(step_of(t_start + tau));
  for (double t : t_list)
    for (int j = 0; j < samples_per_member; ++j) {
      const double tj = t + j * sample_spacing;
      add_point(tj);
      for (double tau : tau_list) add_point(tj + tau);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::function<bool(std::int64_t)> StationarityPlan::keep_predicate(double t_start, double dt) const {
  auto steps = std::make_shared<std::vector<std::int64_t>>(required_steps(t_start, dt));
  return [steps](std::int64_t s) { return std::binary_search(steps->begin(), steps->end(), s); };
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::insufficient_samples: return "INSUFFICIENT SAMPLES";
  }
  return "?";
}

double StationarityReport::max_distance(const std::string& functional, const std::string& view) const {
  double d = -1.0;
  for (const auto& c : cells)
    if (c.functional == functional && c.view == view) d = std::max(d, c.distance);
  if (d < 0.0) throw DomainError("no report cells for " + functional + "/" + view);
  return d;
}

std::string StationarityReport::csv() const {
  std::string out = "functional,view,t,tau,distance,threshold,pass\n";
  char line[256];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%.17g,%.17g,%d\n", c.functional.c_str(), c.view.c_str(),
                  c.t, c.tau, c.distance, c.threshold, c.pass ? 1 : 0);
    out += line;
  }
  return out;
}

std::string StationarityReport::text() const {
  std::ostringstream os;
  os << "stationarity verdict: " << to_string(verdict) << "\n";
  os << "burn-in " << burn_in << ", ensemble " << ensemble_size << ", values per law " << sample_size
     << ", threshold " << threshold << "\n";
  char line[256];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "  %-16s %s  t=%-8g tau=%-6g  KS=%.4f  %s\n", c.functional.c_str(),
                  c.view.c_str(), c.t, c.tau, c.distance, c.pass ? "ok" : "exceeds");
    os << line;
  }
  return os.str();
}

MemberSamples collect_member_samples(const TrajectoryRecord& record, const StationarityPlan& plan) {
  plan.validate();
  const std::size_t F = plan.functionals.size(), T = plan.t_list.size(), S = plan.tau_list.size();
  const auto J = static_cast<std::size_t>(plan.samples_per_member);
  MemberSamples out;
  out.base.assign(F, std::vector<std::vector<double>>(T, std::vector<double>(J)));
  out.base_mollified = out.base;
  out.shifted.assign(F, std::vector<std::vector<std::vector<double>>>(
                            T, std::vector<std::vector<double>>(S, std::vector<double>(J))));
  out.shifted_mollified = out.shifted;

  auto time_of = [&](std::size_t ti, std::size_t j) { return plan.t_list[ti] + static_cast<double>(j) * plan.sample_spacing; };
  const int q = plan.mollifier_node_stride(record.dt);
  for (std::size_t ti = 0; ti < T; ++ti)
    for (std::size_t j = 0; j < J; ++j) {
      const State& s = state_at(record, time_of(ti, j));
      std::optional<State> ms;
      if (plan.d1_view) ms = mollified_state(record, time_of(ti, j), plan.mollifier_m, q);
      for (std::size_t f = 0; f < F; ++f) {
        out.base[f][ti][j] = plan.functionals[f](s);
        if (ms) out.base_mollified[f][ti][j] = plan.functionals[f](*ms);
      }
    }
  for (std::size_t si = 0; si < S; ++si) {
    const TrajectoryRecord sh = shift(record, plan.tau_list[si]);
    for (std::size_t ti = 0; ti < T; ++ti)
      for (std::size_t j = 0; j < J; ++j) {
        const State& s = state_at(sh, time_of(ti, j));
        std::optional<State> ms;
        if (plan.d1_view) ms = mollified_state(sh, time_of(ti, j), plan.mollifier_m, q);
        for (std::size_t f = 0; f < F; ++f) {
          out.shifted[f][ti][si][j] = plan.functionals[f](s);
          if (ms) out.shifted_mollified[f][ti][si][j] = plan.functionals[f](*ms);
        }
      }
  }
  return out;
}

StationarityReport stationarity_report(std::span<const MemberSamples> members, const StationarityPlan& plan) {
  plan.validate();
  StationarityReport rep;
  rep.burn_in = plan.burn_in;
  rep.ensemble_size = members.size();
  rep.sample_size = members.size() * static_cast<std::size_t>(plan.samples_per_member);
  if (rep.sample_size == 0) return rep;
  rep.threshold = plan.threshold >= 0.0
                      ? plan.threshold
                      : ks_critical_value(rep.sample_size, rep.sample_size, plan.alpha, plan.permutations, plan.seed);

  auto pool = [&](auto get) {
    std::vector<double> v;
    for (const auto& m : members) {
      const auto& row = get(m);
      v.insert(v.end(), row.begin(), row.end());
    }
    return v;
  };
  bool all_pass = true;
  for (std::size_t f = 0; f < plan.functionals.size(); ++f)
    for (std::size_t ti = 0; ti < plan.t_list.size(); ++ti)
      for (std::size_t si = 0; si < plan.tau_list.size(); ++si)
        for (int view = 0; view < (plan.d1_view ? 2 : 1); ++view) {
          const auto a = pool([&](const MemberSamples& m) -> const std::vector<double>& {
            return view == 0 ? m.base[f][ti] : m.base_mollified[f][ti];
          });
          const auto b = pool([&](const MemberSamples& m) -> const std::vector<double>& {
            return view == 0 ? m.shifted[f][ti][si] : m.shifted_mollified[f][ti][si];
          });
          StationarityCell c;
          c.functional = plan.functionals[f].name;
          c.view = view == 0 ? "D2" : "D1";
          c.t = plan.t_list[ti];
          c.tau = plan.tau_list[si];
          c.distance = ks_distance(a, b);
          c.threshold = rep.threshold;
          c.pass = c.distance < rep.threshold;
          all_pass = all_pass && c.pass;
          rep.cells.push_back(c);
        }
  if (members.size() < 2 || rep.sample_size < plan.min_samples)
    rep.verdict = Verdict::insufficient_samples;
  else
    rep.verdict = all_pass ? Verdict::pass : Verdict::fail;
  return rep;
}

StationarityReport stationarity_report(std::span<const TrajectoryRecord> ensemble, const StationarityPlan& plan) {
  std::vector<MemberSamples> members;
  for (const auto& r : ensemble) members.push_back(collect_member_samples(r, plan));
  return stationarity_report(std::span<const MemberSamples>(members), plan);
}

EmpiricalLaw krylov_bogoliubov_average(std::span<const TrajectoryRecord> ensemble, double t_start,
                                       double horizon, const Functional& f, double spacing) {
  if (!(horizon > 0.0)) throw WindowError("Krylov–Bogoliubov average needs T > 0");
  EmpiricalLaw law;
  law.name = f.name;
  for (const auto& r : ensemble) {
    const double tol = 0.5 * r.dt;
    const double t_end = t_start + horizon;
    auto take = [&](const auto& times, auto value) {
      if (times.empty() || times.front() > t_start + tol || times.back() < t_end - tol)
        throw WindowError("record does not cover [" + std::to_string(t_start) + ", " + std::to_string(t_end) + "]");
      double last = -INFINITY;
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t < t_start - tol || t > t_end + tol) continue;
        if (spacing > 0.0 && t < last + spacing - tol) continue;
        law.values.push_back(value(i));
        last = t;
      }
    };
    if (f.from_index) {
      std::vector<double> times;
      for (const auto& row : r.index) times.push_back(row.t);
      take(times, [&](std::size_t i) { return f.from_index(r.index[i]); });
    } else {
      take(r.times, [&](std::size_t i) { return f(r.states[i]); });
    }
  }
  return law;
}

std::vector<TrajectoryRecord> ramp_surrogate_ensemble(const TorusGrid& grid, const ModelParams& params,
                                                      int members, double horizon, double dt,
                                                      const std::function<bool(std::int64_t)>& keep_step) {
  if (members < 1 || !(horizon >= 0.0) || !(dt > 0.0)) throw DomainError("ramp surrogate: bad arguments");
  const std::int64_t steps = std::llround(horizon / dt);
  const double rho0 = params.total_mass / grid.volume();
  TrajectoryRecord proto;
  proto.grid = grid;
  proto.params = params;
  proto.dt = dt;
  proto.health.positivity_ok = true;
  proto.health.min_rho = rho0;
  for (std::int64_t s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const State st = make_state(t, SpectralField::constant(grid, rho0 * (1.0 + t)), SpectralVectorField::zeros(grid));
    proto.index.push_back(index_row(st, params));
    if (keep_step && s != 0 && s != steps && !keep_step(s)) continue;
    proto.times.push_back(t);
    proto.steps.push_back(s);
    proto.states.push_back(st);
  }
  std::vector<TrajectoryRecord> out(static_cast<std::size_t>(members), proto);
  for (int m = 0; m < members; ++m) out[static_cast<std::size_t>(m)].member = static_cast<std::uint64_t>(m);
  return out;
}

}  // namespace scns
