#pragma once

#include <complex>
#include <span>

#include "scns/grid.hpp"

namespace scns::fft {

using cplx = std::complex<double>;

/// Forward transform of real samples: c_m = n^{-d} Σ_j f(x_j) e^{-i k_m·x_j}.
void forward(const TorusGrid& grid, std::span<const double> samples, std::span<cplx> modes);
/// Inverse transform returning the real part: f(x_j) = Σ_m c_m e^{i k_m·x_j}.
void inverse(const TorusGrid& grid, std::span<const cplx> modes, std::span<double> samples);
/// Complex-to-complex variants (no real projection).
void forward_complex(const TorusGrid& grid, std::span<const cplx> in, std::span<cplx> out);
void inverse_complex(const TorusGrid& grid, std::span<const cplx> in, std::span<cplx> out);

}  // namespace scns::fft
