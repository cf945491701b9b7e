#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "scns/field.hpp"
#include "scns/model.hpp"

namespace scns {

/// (ρ, u) at one time instant; u ∈ H_N, q = ρu cached on the collocation grid.
struct State {
  double t = 0.0;
  SpectralField rho;
  SpectralVectorField u;
  SpectralVectorField q;

  const TorusGrid& grid() const { return rho.grid(); }
};

/// Builds a State with both representations populated and q = ρu.
State make_state(double t, const SpectralField& rho, const SpectralVectorField& u);
/// ρ₀ = M₀/|𝕋|, u₀ = 0.
State default_initial_state(const TorusGrid& grid, const ModelParams& params);

/// Orthonormal trigonometric basis e_m = e^{ik_m·x}/√|𝕋| of one component of H_N.
class GalerkinBasis {
 public:
  explicit GalerkinBasis(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return indices_.size(); }
  std::span<const std::size_t> indices() const { return indices_; }

  /// ⟨f, e_m⟩ for every basis function (discrete inner product).
  std::vector<cplx> coefficients(const SpectralField& f) const;
  std::vector<cplx> coefficients_from_modes(std::span<const cplx> modes) const;
  /// Σ c_m e_m as a field.
  SpectralField field(std::span<const cplx> coefficients) const;
  /// Scatters coefficients into a full mode array.
  std::vector<cplx> modes(std::span<const cplx> coefficients) const;

 private:
  TorusGrid grid_;
  std::vector<std::size_t> indices_;
  double sqrt_volume_;
};

/// One coefficient vector per velocity component in the orthonormal H_N basis.
struct GalerkinVector {
  std::vector<std::vector<cplx>> components;

  static GalerkinVector zeros(int dim, std::size_t size);
  GalerkinVector& operator+=(const GalerkinVector& o);
  GalerkinVector& axpy(double s, const GalerkinVector& o);
  /// Real L² pairing Σ Re(conj(a)·b).
  double dot(const GalerkinVector& o) const;
};

/// Momentum functionals m_φ = ∫ρu·φ for every basis φ of H_N.
GalerkinVector momentum_functionals(const SpectralField& rho, const SpectralVectorField& u);
GalerkinVector galerkin_coefficients(const SpectralVectorField& v);
SpectralVectorField galerkin_field(const TorusGrid& grid, const GalerkinVector& c);

/// Independent N(0, Δt) increments for each (member, mode, step), regenerated
/// bit-identically from the root seed by counter-based hashing.
class WienerPath {
 public:
  WienerPath(std::uint64_t seed, std::uint64_t member, int modes, double dt)
      : seed_(seed), member_(member), modes_(modes), dt_(dt) {}

  double increment(std::int64_t step, int k) const;
  std::vector<double> increments(std::int64_t step) const;
  int modes() const { return modes_; }
  double dt() const { return dt_; }

  /// Standard normal variate keyed by the full counter tuple.
  static double standard_normal(std::uint64_t seed, std::uint64_t member, std::uint64_t mode,
                                std::uint64_t step, std::uint64_t lane);

 private:
  std::uint64_t seed_;
  std::uint64_t member_;
  int modes_;
  double dt_;
};

struct StepperConfig {
  double dt = 1e-3;
  int max_retries = 4;   // Δt-halving levels on negative density
  bool symmetric = false;  // project onto the symmetry class after each step

  void validate() const;
};

/// Strong-form right-hand side of the continuity equation (dρ/dt).
SpectralField continuity_rhs(const State& state, const ModelParams& params);

/// Named drift contributions to d m_φ/dt, each as H_N coefficients.
struct MomentumDrift {
  GalerkinVector convective;           // ∫ρ[u]_R⊗u:∇φ
  GalerkinVector pressure;             // H ∫aρ^γ div φ
  GalerkinVector artificial_pressure;  // H ∫δρ^Γ div φ
  GalerkinVector viscous;              // −∫S(∇u):∇φ
  GalerkinVector eps_laplace;          // ε∫ρu·Δφ
  GalerkinVector eps_damping;          // −2ε∫ρu·φ (zero level)

  GalerkinVector total() const;
};

MomentumDrift momentum_drift(const State& state, const ModelParams& params);
/// H_N coefficients of Π_N g_k for each k.
std::vector<GalerkinVector> noise_projections(const State& state, const NoiseModel& noise);
/// ∫ρ Π_N g_k · φ for each k.
std::vector<GalerkinVector> noise_functionals(const State& state, const NoiseModel& noise);

/// Increment of the momentum functionals over one step: drift·Δt + Σ_k N_k ΔW_k.
struct MomentumIncrement {
  GalerkinVector drift;  // per unit time
  GalerkinVector noise;  // Σ_k N_k ΔW_k
  GalerkinVector total(double dt) const;
};

MomentumIncrement momentum_rhs_weak(const State& state, const ModelParams& params,
                                    const NoiseModel& noise, std::span<const double> dW);

/// Solves (M[ρ] + Δt_visc A) c = m where M[ρ]_{φψ} = ∫ρφ·ψ and A is the
/// Galerkin viscous operator; Δt_visc = 0 gives the plain velocity recovery.
/// Throws SingularMass if max ρ / min ρ exceeds 1e12 or ρ is not positive.
SpectralVectorField recover_velocity(const SpectralField& rho, const GalerkinVector& momentum,
                                     const ModelParams& params = {}, double viscous_dt = 0.0);

/// One semi-implicit Euler–Maruyama step with Δt-halving on negative density.
/// `retries`, if given, is incremented once per Δt halving.
State em_step(const State& state, const ModelParams& params, const NoiseModel& noise,
              const StepperConfig& config, std::span<const double> dW, int* retries = nullptr);

/// Scalar diagnostics written to the trajectory index.
struct IndexRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
  double sobolev12_sq = 0.0;
  double min_rho = 0.0;
};

IndexRow index_row(const State& state, const ModelParams& params);

struct RunHealth {
  double min_rho = 0.0;
  double max_symmetry_defect = 0.0;
  int retries = 0;
  bool positivity_ok = true;
};

/// Sampled path with the Wiener increments that produced it.
struct TrajectoryRecord {
  TorusGrid grid;
  ModelParams params;
  double dt = 0.0;
  int stride = 1;
  std::uint64_t seed = 0;
  std::uint64_t member = 0;
  int noise_modes = 0;
  bool symmetric = false;
  int max_retries = 4;

  std::vector<double> times;
  std::vector<State> states;
  std::vector<std::int64_t> steps;    // stepper step index of each state
  std::vector<double> increments;     // step-major ΔW, noise_modes per step
  std::vector<IndexRow> index;
  RunHealth health;

  std::size_t sample_count() const { return states.size(); }
  /// Σ ΔW_k over stepper steps [from, to).
  std::vector<double> summed_increments(std::int64_t from, std::int64_t to) const;
  /// Index of the sample at time t (within half a step); nullopt if absent.
  std::optional<std::size_t> find_time(double t) const;
};

struct RecordOptions {
  int state_stride = 1;
  int index_stride = 1;
  bool track_symmetry = false;
  /// When set, a state is stored iff keep_step(step) (the final state is always stored).
  std::function<bool(std::int64_t)> keep_step;
};

/// Integrates from `initial` over [t₀, t₀ + T].
TrajectoryRecord simulate(const State& initial, double horizon, const ModelParams& params,
                          const NoiseModel& noise, const StepperConfig& config,
                          std::uint64_t seed, std::uint64_t member = 0,
                          const RecordOptions& options = {});

/// Same as `simulate` with caller-supplied step-major increments (steps × K),
/// e.g. a coarse path obtained by summing a finer one.
TrajectoryRecord simulate_with_increments(const State& initial, double horizon,
                                          const ModelParams& params, const NoiseModel& noise,
                                          const StepperConfig& config,
                                          std::span<const double> increments, std::uint64_t seed,
                                          std::uint64_t member = 0, const RecordOptions& options = {});

/// Visitor called at the start of every replayed step with the step index,
/// the state at that step and its Wiener increments.
using StepVisitor = std::function<void(std::int64_t, const State&, std::span<const double>)>;

/// Re-integrates the record from stored sample `from` to stored sample `to`
/// with the recorded increments and returns the final state. The stepper is
/// deterministic, so the result reproduces the stored state bit for bit.
State replay(const TrajectoryRecord& record, const NoiseModel& noise, std::size_t from, std::size_t to,
             const StepVisitor& visit);

}  // namespace scns
