#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scns/dynamics.hpp"

namespace scns {

/// Scalar functional of the state. `from_index`, when set, gives the same value
/// from a trajectory index row so long runs need not store states.
struct Functional {
  std::string name;
  std::function<double(const State&)> map;
  std::function<double(const IndexRow&)> from_index;

  double operator()(const State& s) const { return map(s); }
};

namespace functionals {
Functional mass();
Functional energy(const ModelParams& params);
/// ‖u‖²_{W^{1,2}}
Functional velocity_norm();
Functional min_density();
/// |û_c(m)| of one velocity component.
Functional mode_amplitude(int component, const std::array<int, 3>& mode);
}  // namespace functionals

/// "mass", "energy", "velocity_norm", "min_rho", or "mode:<c>:<m1>:<m2>[:<m3>]".
/// Throws ConfigError on an unknown name.
Functional functional_by_name(const std::string& name, const ModelParams& params);

/// S_τ: samples from t₀ + τ on, re-based to start at t₀; increments and step
/// indices re-based accordingly. States are copied bitwise (only their t changes).
/// Throws DomainError for τ < 0, WindowError when no sample sits at t₀ + τ.
TrajectoryRecord shift(const TrajectoryRecord& record, double tau);

struct EmpiricalLaw {
  std::string name;
  std::vector<double> values;
  std::size_t count() const { return values.size(); }
};

/// {F(U_ω(t))} over ensemble members. Throws WindowError if a member lacks a sample at t.
EmpiricalLaw marginal_law_samples(std::span<const TrajectoryRecord> ensemble, double t, const Functional& f);

/// ψ_m(s) = (15m/16)(1 − (ms)²)² on |s| < 1/m, zero elsewhere; unit mass.
double mollifier(double s, int m);

/// F(Σ_i w_i U(t_i)) with w_i ∝ ψ_m(t − t_i) over the stored samples, weights
/// renormalized to sum to one. With node_stride > 1 only samples a multiple of
/// node_stride steps away from t enter. Throws DomainError for m < 1,
/// WindowError if [t − 1/m, t + 1/m] leaves the record.
double mollified_evaluation(const TrajectoryRecord& record, double t, int m, const Functional& f,
                            int node_stride = 1);
/// The averaged state itself.
State mollified_state(const TrajectoryRecord& record, double t, int m, int node_stride = 1);

/// Piecewise-constant path Ũ(t) = U(t_i) on [t_i, t_i + Δt).
struct PiecewisePath {
  std::vector<State> samples;
  double t0 = 0.0;
  double dt = 0.0;

  const State& at(double t) const;
  double end() const { return t0 + dt * static_cast<double>(samples.size()); }
};

struct EmbedResult {
  PiecewisePath path;
  double discrete_sum = 0.0;   // Σ_i ‖U(t_i)‖Δt
  double path_integral = 0.0;  // ∫‖Ũ(t)‖dt, by quadrature over the path
  bool isometric = false;      // |difference| ≤ 1e−12 (relative)
};

/// ‖U‖ = (‖ρ‖²_{L²} + ‖u‖²_{L²})^{1/2}. Throws DomainError on no samples or Δt ≤ 0.
double state_norm(const State& s);
EmbedResult piecewise_embed(std::span<const State> samples, double dt, double t0 = 0.0);

/// Two-sample Kolmogorov–Smirnov statistic. Throws DomainError if either law is empty.
double ks_distance(const EmpiricalLaw& a, const EmpiricalLaw& b);
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Smallest c with P(D ≥ c) ≤ α under random relabelling of n₁ + n₂ distinct
/// values, estimated from `permutations` shuffles of a seeded generator.
double ks_critical_value(std::size_t n1, std::size_t n2, double alpha, int permutations = 2000,
                         std::uint64_t seed = 0x5eed);

struct StationarityPlan {
  std::vector<Functional> functionals;
  std::vector<double> t_list;
  std::vector<double> tau_list;
  int samples_per_member = 1;
  double sample_spacing = 1.0;
  int mollifier_m = 4;
  int mollifier_stride = 0;  // steps between mollifier nodes; 0: about 64 nodes per window
  bool d1_view = true;
  double alpha = 0.01;
  int permutations = 2000;
  std::uint64_t seed = 0x5eed;
  double threshold = -1.0;  // < 0: permutation critical value at the actual sample size
  std::size_t min_samples = 16;
  double burn_in = 0.0;  // reported only

  void validate() const;
  int mollifier_node_stride(double dt) const;
  /// Stepper steps whose states the report reads, for a run starting at t_start.
  std::vector<std::int64_t> required_steps(double t_start, double dt) const;
  /// Predicate form of required_steps, for RecordOptions::keep_step.
  std::function<bool(std::int64_t)> keep_predicate(double t_start, double dt) const;
};

struct StationarityCell {
  std::string functional;
  std::string view;  // "D2" or "D1"
  double t = 0.0;
  double tau = 0.0;
  double distance = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

enum class Verdict { pass, fail, insufficient_samples };
std::string to_string(Verdict v);

struct StationarityReport {
  std::vector<StationarityCell> cells;
  Verdict verdict = Verdict::insufficient_samples;
  double burn_in = 0.0;
  std::size_t ensemble_size = 0;
  std::size_t sample_size = 0;  // values per law
  double threshold = 0.0;

  double max_distance(const std::string& functional, const std::string& view) const;
  /// functional,view,t,tau,distance,threshold,pass
  std::string csv() const;
  std::string text() const;
};

/// Per member, every value the report compares: for each functional, the D2
/// samples at t + jΔ and t + τ + jΔ, and the D1 samples of the mollified path
/// of U and S_τU.
struct MemberSamples {
  // [functional][t][j] and [functional][t][tau][j]
  std::vector<std::vector<std::vector<double>>> base, base_mollified;
  std::vector<std::vector<std::vector<std::vector<double>>>> shifted, shifted_mollified;
};

MemberSamples collect_member_samples(const TrajectoryRecord& record, const StationarityPlan& plan);
StationarityReport stationarity_report(std::span<const MemberSamples> members, const StationarityPlan& plan);
StationarityReport stationarity_report(std::span<const TrajectoryRecord> ensemble, const StationarityPlan& plan);

/// Time-averaged law: F at every sample in [t_start, t_start + T], pooled over
/// members, thinned to one value per `spacing` (0 keeps all). Uses index rows
/// when the functional supports them, stored states otherwise.
/// Throws WindowError if a member does not cover the window.
EmpiricalLaw krylov_bogoliubov_average(std::span<const TrajectoryRecord> ensemble, double t_start,
                                       double horizon, const Functional& f, double spacing = 0.0);

/// Deterministic non-stationary control: ρ(t) = (M₀/|𝕋|)(1 + t), u = 0, sampled every dt on [0, T].
/// With `keep_step`, only those steps (and the end points) store a state.
std::vector<TrajectoryRecord> ramp_surrogate_ensemble(const TorusGrid& grid, const ModelParams& params,
                                                      int members, double horizon, double dt,
                                                      const std::function<bool(std::int64_t)>& keep_step = {});

}  // namespace scns
