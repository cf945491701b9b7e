#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scns/dynamics.hpp"

namespace scns {

/// Energy functional with the rate terms of its Itô balance at one state.
///
/// Zero level: dE + D dt = Σ_k I_k dW_k + R dt with
///   D = eps_damping + dissipation + eps_velocity + eps_density + source_kinetic,
///   R = ito_correction + source_potential.
/// The δ level drops eps_damping and both source terms.
struct EnergyReport {
  double kinetic = 0.0;               // ∫½ρ|u|²
  double pressure_potential = 0.0;    // ∫a/(γ−1)ρ^γ
  double artificial_potential = 0.0;  // ∫δ/(Γ−1)ρ^Γ
  double total = 0.0;

  double dissipation = 0.0;     // ∫S(∇u):∇u
  double eps_damping = 0.0;     // 2ε∫(½ρ|u|² + ρP'(ρ))
  double eps_velocity = 0.0;    // ε∫ρ|∇u|²
  double eps_density = 0.0;     // ε∫P''(ρ)|∇ρ|²
  double source_kinetic = 0.0;  // ½s∫|u|², s = H(ρ̂/M₀)/|𝕋|
  double source_potential = 0.0;  // s∫P'(ρ)
  double ito_correction = 0.0;  // ½Σ_k∫ρ|Π_N g_k|²
  double stochastic_integral = 0.0;  // Σ I_k ΔW_k accumulated over a window

  std::vector<double> noise_flux;  // I_k = ∫ρΠ_N g_k·u

  double dissipative_rate() const;
  double source_rate() const;
};

/// Static part only (kinetic and potentials). Throws NegativeDensity.
EnergyReport energy(const State& state, const ModelParams& params);
/// Static part plus every rate term.
EnergyReport energy_rates(const State& state, const ModelParams& params, const NoiseModel& noise);

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

struct Term {
  std::string name;
  double value = 0.0;
};

/// Named, time-integrated terms of an identity and its residual.
struct TermReport {
  std::string identity;
  TimeWindow window;
  std::vector<Term> terms;
  double residual = 0.0;

  double term(const std::string& name) const;
};

/// residual = E(t₁) − E(t₀) + Σ D·Δt − Σ(R·Δt + Σ_k I_k ΔW_k), left-point sums
/// over every stepper step, reconstructed by replaying the recorded increments.
TermReport energy_balance_residual(const TrajectoryRecord& record, const TimeWindow& window,
                                   const ModelParams& params, const NoiseModel& noise);

/// Right-hand side of the total-mass ODE dρ̂/dt = −2ερ̂ + H(ρ̂/M₀) (−0 at the δ level).
double mass_ode_rhs(double rho_hat, const ModelParams& params);
/// max_t |ρ̂(t) − ρ̂_ref(t)| over the trajectory index, ρ̂_ref by fine-step RK4.
double mass_ode_residual(const TrajectoryRecord& record, const ModelParams& params);

struct LowerBoundReport {
  double observed_min = 0.0;     // min over t ≥ from_time and x of ρ
  double comparison_bound = 0.0; // H(M_ε/M₀)/(|𝕋|(2ε + D))
  double measured_D = 0.0;       // max |div [u]_R| over the same states
  double equilibrium_mass = 0.0; // M_ε
  double ratio() const { return observed_min / comparison_bound; }
};

LowerBoundReport density_lower_bound(const TrajectoryRecord& record, double from_time);

/// b, b′, b″ of a renormalizing function.
struct Renormalization {
  std::string name;
  std::function<double(double)> b, db, d2b;

  static Renormalization z_log_z();
  static Renormalization identity();
  static Renormalization constant(double c);
};

/// residual = Δ∫b(ρ) + Σ Δt[∫(ρb′ − b) div w + ε∫b″|∇ρ|² − ∫b′(ρ)(s − 2ερ)],
/// w = [u]_R at the zero level (u at the δ level, where s and 2ερ are absent).
TermReport renorm_continuity_residual(const TrajectoryRecord& record, const Renormalization& b,
                                      const TimeWindow& window, const NoiseModel& noise);

/// ∫S(∇u):∇u / ‖u‖²_{W^{1,2}} for u in the symmetry class.
/// Throws ZeroField, SymmetryViolation (defect ≥ 1e−10).
double korn_poincare_ratio(const SpectralVectorField& u, const ModelParams& params);

struct ErgodicAverage {
  double average = 0.0;
  std::vector<double> times;     // right end of each partial window
  std::vector<double> partial;   // (1/t)∫₀^t ‖u‖²_{W^{1,2}}
};

/// Left-point time average of ‖u(t)‖²_{W^{1,2}} over [t₀, t₀ + T] from the trajectory index.
ErgodicAverage ergodic_velocity_average(const TrajectoryRecord& record, double horizon);

enum class FluxLevel { epsilon, delta };

/// Per-term rates of the momentum equation tested with
/// ψ_N = Π_N ∇Δ⁻¹[f(ρ) − ⨍f(ρ)], f(ρ) = ρ (ε level) or ρ^α (δ level, 0 < α < 1/3).
struct FluxRates {
  double boundary = 0.0;  // Φ = ∫ρu·ψ_N
  std::vector<Term> terms;
  double gained_integrability = 0.0;  // ∫(aρ^{γ+α} + δρ^{Γ+α} + ρ^{1+α}|u|²)
};

FluxRates effective_viscous_flux_rates(const State& state, const ModelParams& params,
                                       const NoiseModel& noise, std::span<const double> dW,
                                       FluxLevel level, double alpha = 1.0);

/// Time-integrated flux identity: ΔΦ − Σ terms, per-term integrals, and the
/// window integral of the gained-integrability functional.
/// Throws DomainError unless 0 < α < 1/3 at the δ level; WindowError.
TermReport effective_viscous_flux_report(const TrajectoryRecord& record, const TimeWindow& window,
                                         const ModelParams& params, const NoiseModel& noise,
                                         FluxLevel level, double alpha = 1.0);

/// One row per term: "term,value", then "residual,<value>".
std::string report_csv(const TermReport& report);
std::string report_text(const TermReport& report);

}  // namespace scns
