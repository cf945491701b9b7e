#include "scns/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "scns/errors.hpp"

namespace scns {

void TorusGrid::validate() const {
  if (dim < 1 || dim > 3) throw ResolutionError("grid.dim must be 1, 2 or 3");
  if (!(length > 0.0)) throw ResolutionError("grid.length must be positive");
  if (n <= 0 || n % 2 != 0) throw ResolutionError("grid.n must be a positive even integer");
  if (galerkin_cutoff < 0) throw ResolutionError("grid.N must be non-negative");
  if (n < 2 * (2 * galerkin_cutoff + 1)) {
    throw ResolutionError("grid.n = " + std::to_string(n) + " must be >= 2(2N+1) = " +
                          std::to_string(2 * (2 * galerkin_cutoff + 1)));
  }
}

std::size_t TorusGrid::size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

double TorusGrid::volume() const { return std::pow(length, dim); }

double TorusGrid::cell_volume() const { return volume() / static_cast<double>(size()); }

double TorusGrid::wavenumber(int j) const {
  return 2.0 * std::numbers::pi * signed_mode(j) / length;
}

std::array<int, 3> TorusGrid::unravel(std::size_t index) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(index % static_cast<std::size_t>(n));
    index /= static_cast<std::size_t>(n);
  }
  return idx;
}

std::size_t TorusGrid::ravel(const std::array<int, 3>& idx) const {
  std::size_t index = 0;
  for (int a = 0; a < dim; ++a) index = index * static_cast<std::size_t>(n) + idx[a];
  return index;
}

std::size_t TorusGrid::reflect(std::size_t index, unsigned mask) const {
  auto idx = unravel(index);
  for (int a = 0; a < dim; ++a) {
    if (mask & (1u << a)) idx[a] = (n - idx[a]) % n;
  }
  return ravel(idx);
}

std::size_t TorusGrid::negate(std::size_t index) const {
  return reflect(index, (1u << dim) - 1u);
}

std::array<double, 3> TorusGrid::point(std::size_t index) const {
  const auto idx = unravel(index);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[a] = idx[a] * length / n;
  return x;
}

int TorusGrid::mode_inf_norm(std::size_t index) const {
  const auto idx = unravel(index);
  int m = 0;
  for (int a = 0; a < dim; ++a) m = std::max(m, std::abs(signed_mode(idx[a])));
  return m;
}

TorusGrid TorusGrid::refined(int new_n) const {
  TorusGrid g = *this;
  g.n = new_n;
  return g;
}

std::vector<std::size_t> galerkin_indices(const TorusGrid& grid) {
  std::vector<std::size_t> out;
  const std::size_t total = grid.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (grid.mode_inf_norm(i) <= grid.galerkin_cutoff) out.push_back(i);
  }
  return out;
}

}  // namespace scns
