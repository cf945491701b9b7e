#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "scns/field.hpp"

namespace scns {

/// Which approximate system the stepper integrates.
enum class SystemLevel {
  /// Galerkin system with truncation [u]_R, cutoffs and the −2ερ + H source.
  zero,
  /// ε,δ-regularized system: εΔρ and εΔ(ρu) only, no cutoffs or source.
  delta,
};

/// Physical and regularization constants.
struct ModelParams {
  double a = 1.0;             // pressure coefficient
  double gamma = 2.0;         // adiabatic exponent
  double mu = 1.0;            // shear viscosity
  double eta = 0.0;           // bulk viscosity
  double total_mass = 1.0;    // M₀
  double epsilon = 0.1;       // artificial viscosity ε
  double delta = 0.0;         // artificial pressure δ
  double Gamma = 5.0;         // artificial pressure exponent Γ
  double truncation_radius = 10.0;  // R
  int noise_modes = 8;        // K
  SystemLevel level = SystemLevel::zero;

  /// Throws ConfigError naming the violated constraint; `dim` selects the γ bound.
  void validate(int dim) const;
};

/// Smooth cutoff: 1 on (−∞,0], 0 on [1,∞), φ(1−x)/(φ(x)+φ(1−x)) between with φ(s) = e^{−1/s}.
double cutoff_H(double x);
/// dH/dx.
double cutoff_H_derivative(double x);

/// p = aρ^γ + δρ^Γ pointwise. Throws NegativeDensity.
SpectralField pressure(const SpectralField& rho, const ModelParams& params);
/// Throws NegativeDensity if any sample of ρ is negative (or non-finite).
void require_nonnegative(const SpectralField& rho);

/// Newtonian stress S = μ(∇u + ∇uᵀ − (2/3)(div u)I) + η(div u)I; grad(i,j) = ∂_j u_i.
MatrixField stress(const MatrixField& grad, const ModelParams& params);

/// H(‖u‖_{H_N} − R).
double truncation_factor(const SpectralVectorField& u, double radius);
/// [u]_R = H(‖u‖_{H_N} − R) u.
SpectralVectorField truncate_velocity(const SpectralVectorField& u, double radius);

/// Unique root M ∈ (0, M₀] of 2εM = H(M/M₀), by bisection. Throws DomainError for ε ≤ 0.
double solve_M_epsilon(double epsilon, double total_mass);

// ---------------------------------------------------------------------------
// Noise coefficients G_k = ρ g_k(x, ρ, q)
// ---------------------------------------------------------------------------

/// A family {g_k, α_k} of noise coefficient functions.
class NoiseFamily {
 public:
  virtual ~NoiseFamily() = default;

  virtual int size() const = 0;
  /// α_k for 0-based k.
  virtual double amplitude(int k) const = 0;
  /// Pointwise g_k(x, ρ, q) ∈ ℝ^d (unused entries zero).
  virtual std::array<double, 3> evaluate(int k, const std::array<double, 3>& x, double rho,
                                         const std::array<double, 3>& q) const = 0;
  /// Whether g_k depends on q (lets the field evaluator skip q).
  virtual bool depends_on_momentum() const { return true; }

  /// g_k sampled on the grid for every k (not multiplied by ρ).
  virtual std::vector<SpectralVectorField> evaluate_fields(const SpectralField& rho,
                                                           const SpectralVectorField& q) const;
};

/// Default parity-respecting family:
/// g_k^i = α_k σ(ρ) sin(2πκ_i x_i/L) Π_{j≠i} cos(2πκ_j x_j/L), σ(ρ) = 1/(1+ρ), α_k = A/k.
class TrigParityNoise final : public NoiseFamily {
 public:
  TrigParityNoise(const TorusGrid& grid, int modes, double amplitude_scale);

  int size() const override { return static_cast<int>(wave_vectors_.size()); }
  double amplitude(int k) const override { return amplitudes_[static_cast<std::size_t>(k)]; }
  std::array<double, 3> evaluate(int k, const std::array<double, 3>& x, double rho,
                                 const std::array<double, 3>& q) const override;
  bool depends_on_momentum() const override { return false; }
  std::vector<SpectralVectorField> evaluate_fields(const SpectralField& rho,
                                                   const SpectralVectorField& q) const override;

  const std::array<int, 3>& wave_vector(int k) const {
    return wave_vectors_[static_cast<std::size_t>(k)];
  }

  static double sigma(double rho) { return 1.0 / (1.0 + rho); }

 private:
  TorusGrid grid_;
  std::vector<std::array<int, 3>> wave_vectors_;
  std::vector<double> amplitudes_;
  // Spatial factor of component i of mode k at every collocation point.
  std::vector<std::vector<std::vector<double>>> spatial_;
};

/// Wave vectors in ℕ₀^d∖{0} ordered by |κ|₁, ties lexicographically descending.
std::vector<std::array<int, 3>> enumerate_wave_vectors(int dim, int count);

/// Immutable noise model shared read-only by all workers; empty means noise off.
struct NoiseModel {
  std::shared_ptr<const NoiseFamily> family;

  static NoiseModel none() { return {}; }
  static NoiseModel trig_parity(const TorusGrid& grid, int modes, double amplitude_scale);

  int size() const { return family ? family->size() : 0; }
  /// G = Σ α_k².
  double total_intensity() const;
};

/// G_k = ρ g_k(x, ρ, q) for each k. Throws NegativeDensity.
std::vector<SpectralVectorField> noise_eval(const NoiseModel& model, const SpectralField& rho,
                                            const SpectralVectorField& q);

}  // namespace scns
