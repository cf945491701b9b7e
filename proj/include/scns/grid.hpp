#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace scns {

/// Uniform collocation grid on the flat torus [0, L)^d.
///
/// Samples are stored row-major with axis 0 varying slowest. Mode indices
/// follow FFT ordering: storage index j on an axis corresponds to the signed
/// wavenumber j for j <= n/2 and j - n otherwise, so the Nyquist index n/2 is
/// reported as +n/2.
struct TorusGrid {
  int dim = 2;
  double length = 2.0;
  int n = 32;
  int galerkin_cutoff = 7;  // N: Galerkin modes satisfy |m|_inf <= N

  /// Throws ResolutionError unless d in {1,2,3}, n even, n >= 2(2N+1), L > 0.
  void validate() const;

  std::size_t size() const;
  double volume() const;
  double cell_volume() const;

  /// Signed wavenumber of storage index j on one axis.
  int signed_mode(int j) const { return j <= n / 2 ? j : j - n; }
  /// Physical wavenumber 2πm/L of storage index j.
  double wavenumber(int j) const;
  bool is_nyquist(int j) const { return j == n / 2; }

  std::array<int, 3> unravel(std::size_t index) const;
  std::size_t ravel(const std::array<int, 3>& idx) const;
  /// Index of the point reflected in the axes flagged by `mask` (x_a -> -x_a).
  std::size_t reflect(std::size_t index, unsigned mask) const;
  /// Storage index of the negated mode -m.
  std::size_t negate(std::size_t index) const;

  /// Coordinates of collocation point `index`.
  std::array<double, 3> point(std::size_t index) const;
  /// |m|_inf of storage index.
  int mode_inf_norm(std::size_t index) const;

  /// Same geometry with n replaced (Galerkin cutoff kept).
  TorusGrid refined(int new_n) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.dim == b.dim && a.length == b.length && a.n == b.n &&
           a.galerkin_cutoff == b.galerkin_cutoff;
  }
};

/// Storage indices of H_N (|m|_inf <= N) on a grid, in storage order.
std::vector<std::size_t> galerkin_indices(const TorusGrid& grid);

}  // namespace scns
