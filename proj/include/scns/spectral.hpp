#pragma once

#include <utility>

#include "scns/field.hpp"

namespace scns {

// ---------------------------------------------------------------------------
// Galerkin projection and Fourier multipliers
// ---------------------------------------------------------------------------

/// L²-orthogonal projection Π_N: zeroes modes with |m|_inf > N.
/// Throws ResolutionError if N exceeds n/2.
SpectralField project_N(const SpectralField& f, int cutoff);
SpectralVectorField project_N(const SpectralVectorField& v, int cutoff);

/// ∂f/∂x_axis. The Nyquist mode is dropped so the operator is real and
/// skew-adjoint in the discrete inner product.
SpectralField derivative(const SpectralField& f, int axis);
SpectralVectorField gradient(const SpectralField& f);
SpectralField divergence(const SpectralVectorField& v);
/// Entry (i, j) is ∂u_i/∂x_j.
MatrixField vector_gradient(const SpectralVectorField& u);
SpectralField laplacian(const SpectralField& f);
SpectralVectorField laplacian(const SpectralVectorField& v);

/// Δ⁻¹ on the mean-zero part: multiplier -1/|k|² for m ≠ 0, 0 at m = 0.
SpectralField inv_laplacian(const SpectralField& f);
/// ∇Δ⁻¹ f.
SpectralVectorField riesz_grad(const SpectralField& f);
/// ∇Δ⁻¹ div v.
SpectralVectorField riesz_grad_div(const SpectralVectorField& v);
/// ∇Δ⁻¹∇ f: entry (a, b) has multiplier k_a k_b / |k|².
MatrixField riesz_double(const SpectralField& f);

/// Product of two grid fields computed exactly on a 2n-padded grid and
/// truncated back to the n-grid modes (Nyquist folded as the n-grid stores it).
SpectralField dealias_product(const SpectralField& f, const SpectralField& g);

// ---------------------------------------------------------------------------
// Symmetry class: ρ even in every x_a; u^i odd in x_i, even in x_j (j ≠ i)
// ---------------------------------------------------------------------------

SpectralField symmetry_project(const SpectralField& rho);
SpectralVectorField symmetry_project(const SpectralVectorField& u);
std::pair<SpectralField, SpectralVectorField> symmetry_project(const SpectralField& rho,
                                                              const SpectralVectorField& u);
/// L² distance of (ρ, u) to the symmetry class.
double symmetry_defect(const SpectralField& rho, const SpectralVectorField& u);
double symmetry_defect(const SpectralField& rho);
double symmetry_defect(const SpectralVectorField& u);

// ---------------------------------------------------------------------------
// Quadrature and norms (uniform trapezoid on the collocation points)
// ---------------------------------------------------------------------------

double integral(const SpectralField& f);
double mean(const SpectralField& f);
double inner(const SpectralField& f, const SpectralField& g);
double inner(const SpectralVectorField& u, const SpectralVectorField& v);
/// Σ_ij ∫ A_ij B_ij.
double inner(const MatrixField& a, const MatrixField& b);
double lp_norm(const SpectralField& f, double p);
double lp_norm(const SpectralVectorField& u, double p);
double l2_norm(const SpectralVectorField& u);
double max_abs(const SpectralField& f);
double min_value(const SpectralField& f);
/// ‖u‖²_{L²} + ‖∇u‖²_{L²}.
double sobolev12_sq(const SpectralVectorField& u);
double sobolev12_norm(const SpectralVectorField& u);
/// L² norm of Π_N u.
double h_n_norm(const SpectralVectorField& u);

}  // namespace scns
