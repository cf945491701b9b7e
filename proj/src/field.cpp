#include "scns/field.hpp"

#include <stdexcept>

#include "scns/errors.hpp"
#include "scns/fft.hpp"

namespace scns {

SpectralField SpectralField::from_samples(const TorusGrid& grid, std::vector<double> samples) {
  if (samples.size() != grid.size()) throw GridMismatch();
  SpectralField f;
  f.grid_ = grid;
  f.samples_ = std::move(samples);
  f.has_samples_ = true;
  return f;
}

SpectralField SpectralField::from_modes(const TorusGrid& grid, std::vector<cplx> modes) {
  if (modes.size() != grid.size()) throw GridMismatch();
  SpectralField f;
  f.grid_ = grid;
  f.modes_ = std::move(modes);
  f.has_modes_ = true;
  return f;
}

SpectralField SpectralField::from_both(const TorusGrid& grid, std::vector<double> samples,
                                       std::vector<cplx> modes) {
  if (samples.size() != grid.size() || modes.size() != grid.size()) throw GridMismatch();
  SpectralField f;
  f.grid_ = grid;
  f.samples_ = std::move(samples);
  f.modes_ = std::move(modes);
  f.has_samples_ = true;
  f.has_modes_ = true;
  return f;
}

SpectralField SpectralField::constant(const TorusGrid& grid, double value) {
  SpectralField f;
  f.grid_ = grid;
  f.samples_.assign(grid.size(), value);
  f.modes_.assign(grid.size(), cplx{0.0, 0.0});
  f.modes_[0] = value;
  f.has_samples_ = true;
  f.has_modes_ = true;
  return f;
}

SpectralField SpectralField::from_function(
    const TorusGrid& grid, const std::function<double(const std::array<double, 3>&)>& fn) {
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = fn(grid.point(i));
  return from_samples(grid, std::move(s));
}

std::span<const double> SpectralField::samples() const {
  if (!has_samples_) throw std::logic_error("SpectralField: samples are stale");
  return samples_;
}

std::span<const cplx> SpectralField::modes() const {
  if (!has_modes_) throw std::logic_error("SpectralField: modes are stale");
  return modes_;
}

SpectralField to_modes(const SpectralField& f) {
  if (f.has_modes_) return f;
  SpectralField out = f;
  out.modes_.resize(f.size());
  fft::forward(f.grid_, f.samples_, out.modes_);
  // Hermitian symmetry c_{-m} = conj(c_m), exact rather than to round-off.
  const TorusGrid& g = f.grid_;
  for (std::size_t i = 0; i < out.modes_.size(); ++i) {
    const std::size_t j = g.negate(i);
    if (j < i) continue;
    const cplx avg = 0.5 * (out.modes_[i] + std::conj(out.modes_[j]));
    out.modes_[i] = avg;
    out.modes_[j] = std::conj(avg);
  }
  out.has_modes_ = true;
  return out;
}

SpectralField to_samples(const SpectralField& f) {
  if (f.has_samples_) return f;
  SpectralField out = f;
  out.samples_.resize(f.size());
  fft::inverse(f.grid_, f.modes_, out.samples_);
  out.has_samples_ = true;
  return out;
}

std::vector<double> samples_of(const SpectralField& f) {
  if (f.has_samples()) return {f.samples().begin(), f.samples().end()};
  std::vector<double> s(f.size());
  fft::inverse(f.grid(), f.modes(), s);
  return s;
}

std::vector<cplx> modes_of(const SpectralField& f) {
  if (f.has_modes()) return {f.modes().begin(), f.modes().end()};
  const SpectralField m = to_modes(f);
  return {m.modes().begin(), m.modes().end()};
}

SpectralVectorField SpectralVectorField::zeros(const TorusGrid& grid) {
  return SpectralVectorField(std::vector<SpectralField>(static_cast<std::size_t>(grid.dim),
                                                        SpectralField::zeros(grid)));
}

MatrixField MatrixField::zeros(const TorusGrid& grid) {
  MatrixField m;
  m.dim = grid.dim;
  m.entries.assign(static_cast<std::size_t>(grid.dim * grid.dim), SpectralField::zeros(grid));
  return m;
}

void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch();
}

namespace {

SpectralField combine(const SpectralField& a, const SpectralField& b,
                      const std::function<double(double, double)>& op) {
  require_same_grid(a, b);
  auto sa = samples_of(a);
  const auto sb = samples_of(b);
  for (std::size_t i = 0; i < sa.size(); ++i) sa[i] = op(sa[i], sb[i]);
  return SpectralField::from_samples(a.grid(), std::move(sa));
}

}  // namespace

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  return combine(a, b, [](double x, double y) { return x + y; });
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  return combine(a, b, [](double x, double y) { return x - y; });
}

SpectralField operator*(double s, const SpectralField& a) {
  if (a.has_modes() && !a.has_samples()) {
    auto m = modes_of(a);
    for (auto& c : m) c *= s;
    return SpectralField::from_modes(a.grid(), std::move(m));
  }
  auto v = samples_of(a);
  for (auto& x : v) x *= s;
  return SpectralField::from_samples(a.grid(), std::move(v));
}

SpectralField pointwise_product(const SpectralField& a, const SpectralField& b) {
  return combine(a, b, [](double x, double y) { return x * y; });
}

SpectralField pointwise_map(const SpectralField& a, const std::function<double(double)>& f) {
  auto v = samples_of(a);
  for (auto& x : v) x = f(x);
  return SpectralField::from_samples(a.grid(), std::move(v));
}

SpectralVectorField operator+(const SpectralVectorField& a, const SpectralVectorField& b) {
  SpectralVectorField out = a;
  for (int i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return out;
}

SpectralVectorField operator-(const SpectralVectorField& a, const SpectralVectorField& b) {
  SpectralVectorField out = a;
  for (int i = 0; i < a.dim(); ++i) out[i] = a[i] - b[i];
  return out;
}

SpectralVectorField operator*(double s, const SpectralVectorField& a) {
  SpectralVectorField out = a;
  for (int i = 0; i < a.dim(); ++i) out[i] = s * a[i];
  return out;
}

SpectralVectorField scale_pointwise(const SpectralField& s, const SpectralVectorField& v) {
  SpectralVectorField out = v;
  for (int i = 0; i < v.dim(); ++i) out[i] = pointwise_product(s, v[i]);
  return out;
}

}  // namespace scns
