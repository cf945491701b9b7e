#include "scns/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scns/errors.hpp"
#include "scns/spectral.hpp"

namespace scns {

namespace {

struct Potential {
  const ModelParams& p;
  double value(double r) const {
    double v = p.a / (p.gamma - 1.0) * std::pow(r, p.gamma);
    if (p.delta > 0.0) v += p.delta / (p.Gamma - 1.0) * std::pow(r, p.Gamma);
    return v;
  }
  double first(double r) const {
    double v = p.a * p.gamma / (p.gamma - 1.0) * std::pow(r, p.gamma - 1.0);
    if (p.delta > 0.0) v += p.delta * p.Gamma / (p.Gamma - 1.0) * std::pow(r, p.Gamma - 1.0);
    return v;
  }
  double second(double r) const {
    double v = p.a * p.gamma * std::pow(r, p.gamma - 2.0);
    if (p.delta > 0.0) v += p.delta * p.Gamma * std::pow(r, p.Gamma - 2.0);
    return v;
  }
};

double source_density(const ModelParams& p, double rho_hat, double volume) {
  if (p.level != SystemLevel::zero) return 0.0;
  return cutoff_H(rho_hat / p.total_mass) / volume;
}

double velocity_cutoff(const SpectralVectorField& u, const ModelParams& p) {
  return p.level == SystemLevel::zero ? truncation_factor(u, p.truncation_radius) : 1.0;
}

std::pair<std::size_t, std::size_t> resolve(const TrajectoryRecord& rec, const TimeWindow& w) {
  const auto a = rec.find_time(w.t0), b = rec.find_time(w.t1);
  if (!a || !b || *a > *b)
    throw WindowError("window [" + std::to_string(w.t0) + ", " + std::to_string(w.t1) +
                      "] is not covered by recorded samples");
  return {*a, *b};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double EnergyReport::dissipative_rate() const {
  return eps_damping + dissipation + eps_velocity + eps_density + source_kinetic;
}

double EnergyReport::source_rate() const { return ito_correction + source_potential; }

EnergyReport energy(const State& state, const ModelParams& params) {
  require_nonnegative(state.rho);
  const TorusGrid& g = state.grid();
  const auto rho = samples_of(state.rho);
  std::vector<std::vector<double>> u;
  for (int i = 0; i < g.dim; ++i) u.push_back(samples_of(state.u[i]));
  const double w = g.cell_volume();
  EnergyReport e;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    double u2 = 0.0;
    for (const auto& c : u) u2 += c[p] * c[p];
    e.kinetic += 0.5 * rho[p] * u2;
    e.pressure_potential += params.a / (params.gamma - 1.0) * std::pow(rho[p], params.gamma);
    if (params.delta > 0.0)
      e.artificial_potential += params.delta / (params.Gamma - 1.0) * std::pow(rho[p], params.Gamma);
  }
  e.kinetic *= w;
  e.pressure_potential *= w;
  e.artificial_potential *= w;
  e.total = e.kinetic + e.pressure_potential + e.artificial_potential;
  return e;
}

EnergyReport energy_rates(const State& state, const ModelParams& params, const NoiseModel& noise) {
  EnergyReport e = energy(state, params);
  const TorusGrid& g = state.grid();
  const Potential pot{params};
  const double w = g.cell_volume();
  const auto rho = samples_of(state.rho);

  const MatrixField grad = vector_gradient(state.u);
  e.dissipation = inner(stress(grad, params), grad);
  std::vector<std::vector<double>> gs;
  for (const auto& entry : grad.entries) gs.push_back(samples_of(entry));
  const SpectralVectorField grad_rho = gradient(state.rho);
  std::vector<std::vector<double>> gr;
  for (int a = 0; a < g.dim; ++a) gr.push_back(samples_of(grad_rho[a]));
  std::vector<std::vector<double>> u;
  for (int i = 0; i < g.dim; ++i) u.push_back(samples_of(state.u[i]));

  const double rho_hat = integral(state.rho);
  const double s = source_density(params, rho_hat, g.volume());
  const bool zero = params.level == SystemLevel::zero;
  double rho_dp = 0.0, u2_sum = 0.0, dp_sum = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    double gu2 = 0.0, gr2 = 0.0, u2 = 0.0;
    for (const auto& c : gs) gu2 += c[p] * c[p];
    for (const auto& c : gr) gr2 += c[p] * c[p];
    for (const auto& c : u) u2 += c[p] * c[p];
    e.eps_velocity += rho[p] * gu2;
    e.eps_density += pot.second(rho[p]) * gr2;
    rho_dp += rho[p] * pot.first(rho[p]);
    dp_sum += pot.first(rho[p]);
    u2_sum += u2;
  }
  e.eps_velocity *= params.epsilon * w;
  e.eps_density *= params.epsilon * w;
  if (zero) {
    e.eps_damping = 2.0 * params.epsilon * (e.kinetic + rho_dp * w);
    e.source_kinetic = 0.5 * s * u2_sum * w;
    e.source_potential = s * dp_sum * w;
  }

  if (noise.size() > 0) {
    const auto proj = noise_projections(state, noise);
    const auto cu = galerkin_coefficients(state.u);
    double ito = 0.0;
    for (const auto& c : proj) {
      // N_k = M[ρ]Π_N g_k, so N_k·Π_N g_k = ∫ρ|Π_N g_k|².
      const auto fk = momentum_functionals(state.rho, galerkin_field(g, c));
      ito += fk.dot(c);
      e.noise_flux.push_back(fk.dot(cu));
    }
    e.ito_correction = 0.5 * ito;
  }
  return e;
}

double TermReport::term(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return t.value;
  throw DomainError("no term named " + name + " in " + identity);
}

TermReport energy_balance_residual(const TrajectoryRecord& record, const TimeWindow& window,
                                   const ModelParams& params, const NoiseModel& noise) {
  const auto [i0, i1] = resolve(record, window);
  const double h = record.dt;
  EnergyReport acc;
  replay(record, noise, i0, i1, [&](std::int64_t, const State& s, std::span<const double> dW) {
    const EnergyReport r = energy_rates(s, params, noise);
    acc.dissipation += h * r.dissipation;
    acc.eps_damping += h * r.eps_damping;
    acc.eps_velocity += h * r.eps_velocity;
    acc.eps_density += h * r.eps_density;
    acc.source_kinetic += h * r.source_kinetic;
    acc.source_potential += h * r.source_potential;
    acc.ito_correction += h * r.ito_correction;
    for (std::size_t k = 0; k < r.noise_flux.size(); ++k) acc.stochastic_integral += r.noise_flux[k] * dW[k];
  });
  const double e0 = energy(record.states[i0], params).total;
  const double e1 = energy(record.states[i1], params).total;

  TermReport rep;
  rep.identity = "energy_balance";
  rep.window = {record.times[i0], record.times[i1]};
  rep.terms = {{"delta_energy", e1 - e0},
               {"dissipation", acc.dissipation},
               {"eps_damping", acc.eps_damping},
               {"eps_velocity", acc.eps_velocity},
               {"eps_density", acc.eps_density},
               {"source_kinetic", acc.source_kinetic},
               {"source_potential", acc.source_potential},
               {"ito_correction", acc.ito_correction},
               {"stochastic_integral", acc.stochastic_integral}};
  rep.residual = (e1 - e0) + acc.dissipative_rate() - acc.source_rate() - acc.stochastic_integral;
  return rep;
}

double mass_ode_rhs(double rho_hat, const ModelParams& params) {
  if (params.level != SystemLevel::zero) return 0.0;
  return -2.0 * params.epsilon * rho_hat + cutoff_H(rho_hat / params.total_mass);
}

double mass_ode_residual(const TrajectoryRecord& record, const ModelParams& params) {
  const auto& rows = record.index;
  if (rows.empty()) throw WindowError("empty trajectory index");
  const double h_max = std::min(1e-3, record.dt > 0.0 ? record.dt / 4.0 : 1e-3);
  double ref = rows.front().mass;
  double worst = 0.0;
  auto f = [&](double y) { return mass_ode_rhs(y, params); };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double span = rows[i].t - rows[i - 1].t;
    const int sub = std::max(1, static_cast<int>(std::ceil(span / h_max)));
    const double h = span / sub;
    for (int s = 0; s < sub; ++s) {
      const double k1 = f(ref), k2 = f(ref + 0.5 * h * k1), k3 = f(ref + 0.5 * h * k2), k4 = f(ref + h * k3);
      ref += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    worst = std::max(worst, std::abs(rows[i].mass - ref));
  }
  return worst;
}

LowerBoundReport density_lower_bound(const TrajectoryRecord& record, double from_time) {
  const ModelParams& p = record.params;
  LowerBoundReport rep;
  rep.observed_min = std::numeric_limits<double>::infinity();
  const double tol = record.dt > 0.0 ? 0.5 * record.dt : 1e-12;
  bool any = false;
  for (std::size_t i = 0; i < record.states.size(); ++i) {
    if (record.times[i] < from_time - tol) continue;
    any = true;
    const State& s = record.states[i];
    rep.observed_min = std::min(rep.observed_min, min_value(s.rho));
    const double h = velocity_cutoff(s.u, p);
    rep.measured_D = std::max(rep.measured_D, h * max_abs(divergence(s.u)));
  }
  if (!any) throw WindowError("no recorded state at or after t = " + std::to_string(from_time));
  rep.equilibrium_mass = solve_M_epsilon(p.epsilon, p.total_mass);
  rep.comparison_bound = cutoff_H(rep.equilibrium_mass / p.total_mass) /
                         (record.grid.volume() * (2.0 * p.epsilon + rep.measured_D));
  return rep;
}

Renormalization Renormalization::z_log_z() {
  return {"z_log_z", [](double z) { return z > 0.0 ? z * std::log(z) : 0.0; },
          [](double z) { return std::log(z) + 1.0; }, [](double z) { return 1.0 / z; }};
}

Renormalization Renormalization::identity() {
  return {"identity", [](double z) { return z; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

Renormalization Renormalization::constant(double c) {
  return {"constant", [c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

TermReport renorm_continuity_residual(const TrajectoryRecord& record, const Renormalization& b,
                                      const TimeWindow& window, const NoiseModel& noise) {
  const auto [i0, i1] = resolve(record, window);
  const ModelParams& p = record.params;
  const TorusGrid& g = record.grid;
  const double w = g.cell_volume(), h = record.dt;
  const bool zero = p.level == SystemLevel::zero;
  auto integral_b = [&](const State& s) {
    double acc = 0.0;
    for (double r : s.rho.samples()) acc += b.b(r);
    return acc * w;
  };
  double transport = 0.0, viscous = 0.0, reaction = 0.0;
  replay(record, noise, i0, i1, [&](std::int64_t, const State& s, std::span<const double>) {
    const auto rho = s.rho.samples();
    const auto div = samples_of(divergence(s.u));
    const double hw = velocity_cutoff(s.u, p);
    const SpectralVectorField gr = gradient(s.rho);
    std::vector<std::vector<double>> grs;
    for (int a = 0; a < g.dim; ++a) grs.push_back(samples_of(gr[a]));
    const double src = source_density(p, integral(s.rho), g.volume());
    double tr = 0.0, vi = 0.0, re = 0.0;
    for (std::size_t q = 0; q < rho.size(); ++q) {
      const double r = rho[q];
      tr += (r * b.db(r) - b.b(r)) * hw * div[q];
      double g2 = 0.0;
      for (const auto& c : grs) g2 += c[q] * c[q];
      if (p.epsilon != 0.0) vi += b.d2b(r) * g2;
      if (zero) re += b.db(r) * (src - 2.0 * p.epsilon * r);
    }
    transport += h * w * tr;
    viscous += h * w * p.epsilon * vi;
    reaction += h * w * re;
  });
  TermReport rep;
  rep.identity = "renormalized_continuity[" + b.name + "]";
  rep.window = {record.times[i0], record.times[i1]};
  const double delta_b = integral_b(record.states[i1]) - integral_b(record.states[i0]);
  rep.terms = {{"delta_integral_b", delta_b},
               {"transport", transport},
               {"eps_gradient", viscous},
               {"reaction", reaction}};
  rep.residual = delta_b + transport + viscous - reaction;
  return rep;
}

double korn_poincare_ratio(const SpectralVectorField& u, const ModelParams& params) {
  const double norm2 = sobolev12_sq(u);
  if (norm2 == 0.0) throw ZeroField();
  const double defect = symmetry_defect(u);
  if (!(defect < 1e-10 * std::max(1.0, std::sqrt(norm2))))
    throw SymmetryViolation("Korn–Poincaré ratio requires a field in the symmetry class (defect " +
                            std::to_string(defect) + ")");
  const MatrixField grad = vector_gradient(u);
  return inner(stress(grad, params), grad) / norm2;
}

ErgodicAverage ergodic_velocity_average(const TrajectoryRecord& record, double horizon) {
  const auto& rows = record.index;
  if (rows.empty() || !(horizon > 0.0)) throw WindowError("ergodic average needs T > 0 and a non-empty record");
  const double t0 = rows.front().t;
  const double tol = record.dt > 0.0 ? 0.5 * record.dt : 1e-12;
  if (rows.back().t < t0 + horizon - tol) throw WindowError("T beyond record");
  ErgodicAverage out;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < rows.size() && rows[i + 1].t <= t0 + horizon + tol; ++i) {
    acc += rows[i].sobolev12_sq * (rows[i + 1].t - rows[i].t);
    out.times.push_back(rows[i + 1].t);
    out.partial.push_back(acc / (rows[i + 1].t - t0));
  }
  out.average = out.partial.empty() ? 0.0 : out.partial.back();
  return out;
}

namespace {

void check_alpha(FluxLevel level, double alpha) {
  if (level == FluxLevel::delta && !(alpha > 0.0 && alpha < 1.0 / 3.0))
    throw DomainError("α ∈ (0, 1/3) required at the δ level (got " + std::to_string(alpha) + ")");
}

double flux_exponent(FluxLevel level, double alpha) { return level == FluxLevel::epsilon ? 1.0 : alpha; }

// Π_N ∇Δ⁻¹ g as H_N coefficients.
GalerkinVector riesz_test(const SpectralField& g) {
  return galerkin_coefficients(project_N(riesz_grad(g), g.grid().galerkin_cutoff));
}

}  // namespace

FluxRates effective_viscous_flux_rates(const State& state, const ModelParams& params,
                                       const NoiseModel& noise, std::span<const double> dW,
                                       FluxLevel level, double alpha) {
  check_alpha(level, alpha);
  require_nonnegative(state.rho);
  const double ax = flux_exponent(level, alpha);
  const TorusGrid& g = state.grid();
  const SpectralField f = pointwise_map(state.rho, [ax](double r) { return std::pow(r, ax); });
  const GalerkinVector psi = riesz_test(f);
  const GalerkinVector m = momentum_functionals(state.rho, state.u);

  FluxRates out;
  out.boundary = m.dot(psi);
  const MomentumDrift d = momentum_drift(state, params);
  out.terms = {{"pressure", d.pressure.dot(psi)},
               {"artificial_pressure", d.artificial_pressure.dot(psi)},
               {"convective", d.convective.dot(psi)},
               {"viscous", d.viscous.dot(psi)},
               {"eps_laplace", d.eps_laplace.dot(psi)},
               {"eps_damping", d.eps_damping.dot(psi)}};

  // ψ_t = Π_N∇Δ⁻¹[f′(ρ)ρ_t], ρ_t split into transport and regularization parts.
  const SpectralField rho_t = continuity_rhs(state, params);
  const double hw = velocity_cutoff(state.u, params);
  const SpectralField transport = (-hw) * divergence(state.q);
  const SpectralField fprime =
      ax == 1.0 ? SpectralField::constant(g, 1.0)
                : pointwise_map(state.rho, [ax](double r) { return ax * std::pow(r, ax - 1.0); });
  out.terms.push_back({"time_derivative_transport", m.dot(riesz_test(pointwise_product(fprime, transport)))});
  out.terms.push_back(
      {"time_derivative_eps", m.dot(riesz_test(pointwise_product(fprime, rho_t - transport)))});

  double stochastic = 0.0;
  if (noise.size() > 0) {
    const auto n = noise_functionals(state, noise);
    for (std::size_t k = 0; k < n.size(); ++k) stochastic += n[k].dot(psi) * dW[k];
  }
  out.terms.push_back({"stochastic", stochastic});

  const auto rho = state.rho.samples();
  double gain = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    double u2 = 0.0;
    for (int i = 0; i < g.dim; ++i) u2 += std::pow(state.u[i].samples()[p], 2);
    gain += params.a * std::pow(rho[p], params.gamma + ax) + std::pow(rho[p], 1.0 + ax) * u2;
    if (params.delta > 0.0) gain += params.delta * std::pow(rho[p], params.Gamma + ax);
  }
  out.gained_integrability = gain * g.cell_volume();
  return out;
}

TermReport effective_viscous_flux_report(const TrajectoryRecord& record, const TimeWindow& window,
                                         const ModelParams& params, const NoiseModel& noise,
                                         FluxLevel level, double alpha) {
  check_alpha(level, alpha);
  const auto [i0, i1] = resolve(record, window);
  const double h = record.dt;
  std::vector<Term> acc;
  double gain = 0.0;
  replay(record, noise, i0, i1, [&](std::int64_t, const State& s, std::span<const double> dW) {
    const FluxRates r = effective_viscous_flux_rates(s, params, noise, dW, level, alpha);
    if (acc.empty()) {
      acc = r.terms;
      for (auto& t : acc) t.value = 0.0;
    }
    for (std::size_t j = 0; j < r.terms.size(); ++j)
      acc[j].value += r.terms[j].name == "stochastic" ? r.terms[j].value : h * r.terms[j].value;
    gain += h * r.gained_integrability;
  });
  const std::vector<double> none(static_cast<std::size_t>(noise.size()), 0.0);
  const double phi0 = effective_viscous_flux_rates(record.states[i0], params, noise, none, level, alpha).boundary;
  const double phi1 = effective_viscous_flux_rates(record.states[i1], params, noise, none, level, alpha).boundary;

  TermReport rep;
  rep.identity = level == FluxLevel::epsilon ? "effective_viscous_flux[epsilon]"
                                             : "effective_viscous_flux[delta, alpha=" + fmt(alpha) + "]";
  rep.window = {record.times[i0], record.times[i1]};
  double sum = 0.0;
  for (const auto& t : acc) sum += t.value;
  rep.terms.push_back({"boundary_change", phi1 - phi0});
  rep.terms.insert(rep.terms.end(), acc.begin(), acc.end());
  rep.terms.push_back({"gained_integrability", gain});
  rep.residual = (phi1 - phi0) - sum;
  return rep;
}

std::string report_csv(const TermReport& report) {
  std::string out = "term,value\n";
  for (const auto& t : report.terms) out += t.name + "," + fmt(t.value) + "\n";
  out += "residual," + fmt(report.residual) + "\n";
  return out;
}

std::string report_text(const TermReport& report) {
  std::string out = report.identity + " over [" + fmt(report.window.t0) + ", " + fmt(report.window.t1) + "]\n";
  for (const auto& t : report.terms) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-28s % .10e\n", t.name.c_str(), t.value);
    out += line;
  }
  char line[160];
  std::snprintf(line, sizeof line, "  %-28s % .10e\n", "residual", report.residual);
  out += line;
  return out;
}

}  // namespace scns
