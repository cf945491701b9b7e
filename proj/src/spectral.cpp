#include "scns/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scns/errors.hpp"
#include "scns/fft.hpp"

namespace scns {
namespace {

constexpr cplx kI{0.0, 1.0};

struct ModeInfo {
  std::array<double, 3> k{0.0, 0.0, 0.0};
  std::array<bool, 3> nyquist{false, false, false};
  double k2 = 0.0;
};

ModeInfo mode_info(const TorusGrid& g, std::size_t index) {
  ModeInfo info;
  const auto idx = g.unravel(index);
  for (int a = 0; a < g.dim; ++a) {
    info.k[a] = g.wavenumber(idx[a]);
    info.nyquist[a] = g.is_nyquist(idx[a]);
    info.k2 += info.k[a] * info.k[a];
  }
  return info;
}

template <typename Multiplier>
SpectralField apply_multiplier(const SpectralField& f, Multiplier&& mult) {
  auto modes = modes_of(f);
  const TorusGrid& g = f.grid();
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i] *= mult(mode_info(g, i));
  return SpectralField::from_modes(g, std::move(modes));
}

}  // namespace

SpectralField project_N(const SpectralField& f, int cutoff) {
  const TorusGrid& g = f.grid();
  if (cutoff < 0 || cutoff > g.n / 2) {
    throw ResolutionError("projection cutoff N = " + std::to_string(cutoff) +
                          " exceeds grid resolution n/2 = " + std::to_string(g.n / 2));
  }
  auto modes = modes_of(f);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (g.mode_inf_norm(i) > cutoff) modes[i] = 0.0;
  }
  return SpectralField::from_modes(g, std::move(modes));
}

SpectralVectorField project_N(const SpectralVectorField& v, int cutoff) {
  SpectralVectorField out = v;
  for (int i = 0; i < v.dim(); ++i) out[i] = project_N(v[i], cutoff);
  return out;
}

SpectralField derivative(const SpectralField& f, int axis) {
  return apply_multiplier(f, [axis](const ModeInfo& m) -> cplx {
    return m.nyquist[axis] ? cplx{0.0} : kI * m.k[axis];
  });
}

SpectralVectorField gradient(const SpectralField& f) {
  const SpectralField fm = to_modes(f);
  std::vector<SpectralField> c;
  for (int a = 0; a < f.grid().dim; ++a) c.push_back(derivative(fm, a));
  return SpectralVectorField(std::move(c));
}

SpectralField divergence(const SpectralVectorField& v) {
  const TorusGrid& g = v.grid();
  std::vector<cplx> acc(g.size(), cplx{0.0});
  for (int a = 0; a < v.dim(); ++a) {
    const auto d = modes_of(derivative(v[a], a));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  }
  return SpectralField::from_modes(g, std::move(acc));
}

MatrixField vector_gradient(const SpectralVectorField& u) {
  MatrixField m;
  m.dim = u.dim();
  for (int i = 0; i < u.dim(); ++i) {
    const SpectralField ui = to_modes(u[i]);
    for (int j = 0; j < u.dim(); ++j) m.entries.push_back(to_samples(derivative(ui, j)));
  }
  return m;
}

SpectralField laplacian(const SpectralField& f) {
  return apply_multiplier(f, [](const ModeInfo& m) -> cplx { return -m.k2; });
}

SpectralVectorField laplacian(const SpectralVectorField& v) {
  SpectralVectorField out = v;
  for (int i = 0; i < v.dim(); ++i) out[i] = laplacian(v[i]);
  return out;
}

SpectralField inv_laplacian(const SpectralField& f) {
  return apply_multiplier(f, [](const ModeInfo& m) -> cplx {
    return m.k2 == 0.0 ? cplx{0.0} : cplx{-1.0 / m.k2};
  });
}

SpectralVectorField riesz_grad(const SpectralField& f) {
  const SpectralField fm = to_modes(f);
  std::vector<SpectralField> c;
  for (int a = 0; a < f.grid().dim; ++a) {
    c.push_back(apply_multiplier(fm, [a](const ModeInfo& m) -> cplx {
      if (m.k2 == 0.0 || m.nyquist[a]) return 0.0;
      return -kI * m.k[a] / m.k2;
    }));
  }
  return SpectralVectorField(std::move(c));
}

namespace {

// Multiplier of ∂_a Δ⁻¹ ∂_b. Off-diagonal entries vanish on Nyquist axes so
// the output stays real; the diagonal keeps k_a²/|k|² so the trace is exact.
double riesz_pair(const ModeInfo& m, int a, int b) {
  if (m.k2 == 0.0) return 0.0;
  if (a != b && (m.nyquist[a] || m.nyquist[b])) return 0.0;
  return m.k[a] * m.k[b] / m.k2;
}

}  // namespace

SpectralVectorField riesz_grad_div(const SpectralVectorField& v) {
  const TorusGrid& g = v.grid();
  std::vector<std::vector<cplx>> vm;
  for (int b = 0; b < v.dim(); ++b) vm.push_back(modes_of(v[b]));
  std::vector<SpectralField> out;
  for (int a = 0; a < v.dim(); ++a) {
    std::vector<cplx> acc(g.size(), cplx{0.0});
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const ModeInfo m = mode_info(g, i);
      for (int b = 0; b < v.dim(); ++b) acc[i] += riesz_pair(m, a, b) * vm[b][i];
    }
    out.push_back(SpectralField::from_modes(g, std::move(acc)));
  }
  return SpectralVectorField(std::move(out));
}

MatrixField riesz_double(const SpectralField& f) {
  const SpectralField fm = to_modes(f);
  MatrixField out;
  out.dim = f.grid().dim;
  for (int a = 0; a < out.dim; ++a) {
    for (int b = 0; b < out.dim; ++b) {
      out.entries.push_back(
          apply_multiplier(fm, [a, b](const ModeInfo& m) -> cplx { return riesz_pair(m, a, b); }));
    }
  }
  return out;
}

SpectralField dealias_product(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f, g);
  const TorusGrid& grid = f.grid();
  const TorusGrid padded = grid.refined(2 * grid.n);
  const int n = grid.n;
  const int big = padded.n;

  auto embed = [&](const std::vector<cplx>& modes) {
    std::vector<cplx> out(padded.size(), cplx{0.0});
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (modes[i] == cplx{0.0}) continue;
      const auto idx = grid.unravel(i);
      // A Nyquist coefficient is split evenly between +n/2 and -n/2.
      const int combos = 1 << grid.dim;
      for (int c = 0; c < combos; ++c) {
        std::array<int, 3> target{0, 0, 0};
        double weight = 1.0;
        bool valid = true;
        for (int a = 0; a < grid.dim; ++a) {
          const bool alt = (c >> a) & 1;
          if (grid.is_nyquist(idx[a])) {
            target[a] = alt ? big - n / 2 : n / 2;
            weight *= 0.5;
          } else {
            if (alt) {
              valid = false;
              break;
            }
            const int m = grid.signed_mode(idx[a]);
            target[a] = (m + big) % big;
          }
        }
        if (valid) out[padded.ravel(target)] += weight * modes[i];
      }
    }
    return out;
  };

  const auto fp = embed(modes_of(f));
  const auto gp = embed(modes_of(g));
  std::vector<cplx> fs(padded.size()), gs(padded.size());
  fft::inverse_complex(padded, fp, fs);
  fft::inverse_complex(padded, gp, gs);
  for (std::size_t i = 0; i < fs.size(); ++i) fs[i] = cplx{fs[i].real() * gs[i].real(), 0.0};
  std::vector<cplx> prod(padded.size());
  fft::forward_complex(padded, fs, prod);

  std::vector<cplx> out(grid.size(), cplx{0.0});
  for (std::size_t p = 0; p < prod.size(); ++p) {
    const auto idx = padded.unravel(p);
    std::array<int, 3> target{0, 0, 0};
    bool keep = true;
    for (int a = 0; a < grid.dim; ++a) {
      const int m = padded.signed_mode(idx[a]);
      if (std::abs(m) > n / 2) {
        keep = false;
        break;
      }
      target[a] = (m + n) % n;
    }
    if (keep) out[grid.ravel(target)] += prod[p];
  }
  return to_modes(to_samples(SpectralField::from_modes(grid, std::move(out))));
}

// ---------------------------------------------------------------------------

SpectralField symmetry_project(const SpectralField& rho) {
  const TorusGrid& g = rho.grid();
  const auto s = samples_of(rho);
  const unsigned group = 1u << g.dim;
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double acc = 0.0;
    for (unsigned mask = 0; mask < group; ++mask) acc += s[g.reflect(i, mask)];
    out[i] = acc / group;
  }
  return SpectralField::from_samples(g, std::move(out));
}

SpectralVectorField symmetry_project(const SpectralVectorField& u) {
  const TorusGrid& g = u.grid();
  const unsigned group = 1u << g.dim;
  SpectralVectorField out = u;
  for (int c = 0; c < u.dim(); ++c) {
    const auto s = samples_of(u[c]);
    std::vector<double> acc(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double sum = 0.0;
      for (unsigned mask = 0; mask < group; ++mask) {
        const double sign = (mask & (1u << c)) ? -1.0 : 1.0;
        sum += sign * s[g.reflect(i, mask)];
      }
      acc[i] = sum / group;
    }
    out[c] = SpectralField::from_samples(g, std::move(acc));
  }
  return out;
}

std::pair<SpectralField, SpectralVectorField> symmetry_project(const SpectralField& rho,
                                                              const SpectralVectorField& u) {
  return {symmetry_project(rho), symmetry_project(u)};
}

double symmetry_defect(const SpectralField& rho) {
  const SpectralField d = rho - symmetry_project(rho);
  return std::sqrt(inner(d, d));
}

double symmetry_defect(const SpectralVectorField& u) {
  const SpectralVectorField d = u - symmetry_project(u);
  return std::sqrt(inner(d, d));
}

double symmetry_defect(const SpectralField& rho, const SpectralVectorField& u) {
  const double a = symmetry_defect(rho);
  const double b = symmetry_defect(u);
  return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------------------

double integral(const SpectralField& f) {
  if (f.has_modes()) return f.modes()[0].real() * f.grid().volume();
  double acc = 0.0;
  for (double x : f.samples()) acc += x;
  return acc * f.grid().cell_volume();
}

double mean(const SpectralField& f) { return integral(f) / f.grid().volume(); }

double inner(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f, g);
  const auto a = samples_of(f);
  const auto b = samples_of(g);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * f.grid().cell_volume();
}

double inner(const SpectralVectorField& u, const SpectralVectorField& v) {
  double acc = 0.0;
  for (int i = 0; i < u.dim(); ++i) acc += inner(u[i], v[i]);
  return acc;
}

double inner(const MatrixField& a, const MatrixField& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i) acc += inner(a.entries[i], b.entries[i]);
  return acc;
}

double lp_norm(const SpectralField& f, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm requires p >= 1");
  const auto s = samples_of(f);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : s) m = std::max(m, std::abs(x));
    return m;
  }
  double acc = 0.0;
  for (double x : s) acc += std::pow(std::abs(x), p);
  return std::pow(acc * f.grid().cell_volume(), 1.0 / p);
}

double lp_norm(const SpectralVectorField& u, double p) {
  const TorusGrid& g = u.grid();
  std::vector<double> mag(g.size(), 0.0);
  for (int c = 0; c < u.dim(); ++c) {
    const auto s = samples_of(u[c]);
    for (std::size_t i = 0; i < s.size(); ++i) mag[i] += s[i] * s[i];
  }
  for (auto& x : mag) x = std::sqrt(x);
  return lp_norm(SpectralField::from_samples(g, std::move(mag)), p);
}

double l2_norm(const SpectralVectorField& u) { return std::sqrt(inner(u, u)); }

double max_abs(const SpectralField& f) { return lp_norm(f, INFINITY); }

double min_value(const SpectralField& f) {
  const auto s = samples_of(f);
  return *std::min_element(s.begin(), s.end());
}

double sobolev12_sq(const SpectralVectorField& u) {
  const TorusGrid& g = u.grid();
  double acc = 0.0;
  for (int c = 0; c < u.dim(); ++c) {
    const auto m = modes_of(u[c]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const ModeInfo info = mode_info(g, i);
      double grad2 = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        if (!info.nyquist[a]) grad2 += info.k[a] * info.k[a];
      }
      acc += (1.0 + grad2) * std::norm(m[i]);
    }
  }
  return acc * g.volume();
}

double sobolev12_norm(const SpectralVectorField& u) { return std::sqrt(sobolev12_sq(u)); }

double h_n_norm(const SpectralVectorField& u) {
  return l2_norm(project_N(u, u.grid().galerkin_cutoff));
}

}  // namespace scns
