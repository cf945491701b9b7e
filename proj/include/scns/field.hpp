#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scns/grid.hpp"

namespace scns {

using cplx = std::complex<double>;

/// Real periodic scalar field carrying collocation samples and/or Fourier
/// modes. Either representation may be stale; `to_modes` / `to_samples`
/// return a copy with both populated. Fields are immutable values once built,
/// so they can be shared read-only between threads.
class SpectralField {
 public:
  SpectralField() = default;

  static SpectralField from_samples(const TorusGrid& grid, std::vector<double> samples);
  static SpectralField from_modes(const TorusGrid& grid, std::vector<cplx> modes);
  /// Both representations supplied by the caller, who guarantees they agree.
  static SpectralField from_both(const TorusGrid& grid, std::vector<double> samples,
                                 std::vector<cplx> modes);
  static SpectralField constant(const TorusGrid& grid, double value);
  static SpectralField zeros(const TorusGrid& grid) { return constant(grid, 0.0); }
  /// Samples f(x_j) of a callable on the collocation points.
  static SpectralField from_function(const TorusGrid& grid,
                                     const std::function<double(const std::array<double, 3>&)>& f);

  const TorusGrid& grid() const { return grid_; }
  bool has_samples() const { return has_samples_; }
  bool has_modes() const { return has_modes_; }

  /// Throws std::logic_error if the requested representation is stale.
  std::span<const double> samples() const;
  std::span<const cplx> modes() const;

  std::size_t size() const { return grid_.size(); }

 private:
  TorusGrid grid_{};
  std::vector<double> samples_;
  std::vector<cplx> modes_;
  bool has_samples_ = false;
  bool has_modes_ = false;

  friend SpectralField to_modes(const SpectralField& f);
  friend SpectralField to_samples(const SpectralField& f);
};

/// Populates the mode representation and enforces Hermitian symmetry.
SpectralField to_modes(const SpectralField& f);
/// Populates the sample representation.
SpectralField to_samples(const SpectralField& f);

/// Samples of f, transforming if needed.
std::vector<double> samples_of(const SpectralField& f);
/// Modes of f, transforming if needed.
std::vector<cplx> modes_of(const SpectralField& f);

/// Vector field: `dim` scalar components on a common grid.
struct SpectralVectorField {
  std::vector<SpectralField> components;

  SpectralVectorField() = default;
  explicit SpectralVectorField(std::vector<SpectralField> c) : components(std::move(c)) {}
  static SpectralVectorField zeros(const TorusGrid& grid);

  int dim() const { return static_cast<int>(components.size()); }
  const TorusGrid& grid() const { return components.front().grid(); }
  const SpectralField& operator[](int i) const { return components[static_cast<std::size_t>(i)]; }
  SpectralField& operator[](int i) { return components[static_cast<std::size_t>(i)]; }
};

/// d×d matrix field stored row-major.
struct MatrixField {
  int dim = 0;
  std::vector<SpectralField> entries;

  static MatrixField zeros(const TorusGrid& grid);
  const SpectralField& operator()(int i, int j) const {
    return entries[static_cast<std::size_t>(i * dim + j)];
  }
  SpectralField& operator()(int i, int j) { return entries[static_cast<std::size_t>(i * dim + j)]; }
};

void require_same_grid(const SpectralField& a, const SpectralField& b);

// Pointwise algebra on samples (exact collocation, no dealiasing).
SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);
SpectralField pointwise_product(const SpectralField& a, const SpectralField& b);
SpectralField pointwise_map(const SpectralField& a, const std::function<double(double)>& f);

SpectralVectorField operator+(const SpectralVectorField& a, const SpectralVectorField& b);
SpectralVectorField operator-(const SpectralVectorField& a, const SpectralVectorField& b);
SpectralVectorField operator*(double s, const SpectralVectorField& a);
/// Componentwise product s(x)·v(x).
SpectralVectorField scale_pointwise(const SpectralField& s, const SpectralVectorField& v);

}  // namespace scns
