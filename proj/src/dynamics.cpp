#include "scns/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "scns/errors.hpp"
#include "scns/fft.hpp"
#include "scns/spectral.hpp"

namespace scns {

namespace {

constexpr double kMaxMassCondition = 1e12;

// Wavenumber tables and transform helpers shared by every routine in this file.
struct Kernel {
  TorusGrid grid;
  int d = 0;
  std::size_t size = 0;
  double volume = 0.0;
  double sqrt_volume = 0.0;
  std::vector<std::size_t> gidx;
  std::vector<std::array<double, 3>> gk;  // k at Galerkin modes
  std::vector<double> gk2;
  std::vector<double> k2;  // |k|² on the full grid
  std::vector<std::array<double, 3>> kd;  // derivative multipliers, 0 on Nyquist axes

  explicit Kernel(const TorusGrid& g) : grid(g), d(g.dim), size(g.size()) {
    volume = g.volume();
    sqrt_volume = std::sqrt(volume);
    gidx = galerkin_indices(g);
    k2.resize(size);
    kd.assign(size, {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < size; ++i) {
      const auto idx = g.unravel(i);
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        const double ka = g.wavenumber(idx[a]);
        s += ka * ka;
        if (!g.is_nyquist(idx[a])) kd[i][a] = ka;
      }
      k2[i] = s;
    }
    for (std::size_t i : gidx) {
      const auto idx = g.unravel(i);
      std::array<double, 3> k{0.0, 0.0, 0.0};
      for (int a = 0; a < d; ++a) k[a] = g.wavenumber(idx[a]);
      gk.push_back(k);
      gk2.push_back(k2[i]);
    }
  }

  std::size_t gsize() const { return gidx.size(); }

  std::vector<cplx> fwd(std::span<const double> s) const {
    std::vector<cplx> m(size);
    fft::forward(grid, s, m);
    return m;
  }
  std::vector<double> inv(std::span<const cplx> m) const {
    std::vector<double> s(size);
    fft::inverse(grid, m, s);
    return s;
  }
  std::vector<cplx> gather(std::span<const cplx> modes) const {
    std::vector<cplx> c(gsize());
    for (std::size_t g = 0; g < c.size(); ++g) c[g] = sqrt_volume * modes[gidx[g]];
    return c;
  }
  // Coefficients of i k_axis f, i.e. of ∂_axis f.
  std::vector<cplx> gather_derivative(std::span<const cplx> modes, int axis, double factor) const {
    std::vector<cplx> c(gsize());
    for (std::size_t g = 0; g < c.size(); ++g)
      c[g] = cplx{0.0, factor * gk[g][axis] * sqrt_volume} * modes[gidx[g]];
    return c;
  }
  std::vector<cplx> scatter(std::span<const cplx> c) const {
    std::vector<cplx> m(size, cplx{0.0, 0.0});
    for (std::size_t g = 0; g < c.size(); ++g) m[gidx[g]] = c[g] / sqrt_volume;
    return m;
  }
  std::vector<double> synthesize(std::span<const cplx> c) const { return inv(scatter(c)); }
};

const Kernel& kernel_for(const TorusGrid& grid) {
  thread_local std::unique_ptr<Kernel> cached;
  if (!cached || !(cached->grid == grid)) cached = std::make_unique<Kernel>(grid);
  return *cached;
}

void require_positive(std::span<const double> rho) {
  std::size_t where = 0;
  double lo = rho[0];
  for (std::size_t p = 1; p < rho.size(); ++p)
    if (rho[p] < lo || std::isnan(rho[p])) {
      lo = rho[p];
      where = p;
      if (std::isnan(lo)) break;
    }
  if (!(lo > 0.0)) throw NegativeDensity(where, lo);
}

void require_conditioned(std::span<const double> rho) {
  const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
  if (!(*lo > 0.0)) throw SingularMass(std::numeric_limits<double>::infinity());
  const double cond = *hi / *lo;
  if (cond > kMaxMassCondition) throw SingularMass(cond);
}

GalerkinVector zeros_like(const Kernel& k) { return GalerkinVector::zeros(k.d, k.gsize()); }

GalerkinVector coefficients_of(const Kernel& k, const SpectralVectorField& v) {
  GalerkinVector c;
  for (int i = 0; i < k.d; ++i) c.components.push_back(k.gather(modes_of(v[i])));
  return c;
}

double h_norm(const GalerkinVector& c) { return std::sqrt(c.dot(c)); }

double reaction_source(const Kernel& k, const ModelParams& p, double rho_mean) {
  if (p.level != SystemLevel::zero) return 0.0;
  return cutoff_H(rho_mean * k.volume / p.total_mass) / k.volume;
}

// M[ρ] c.
GalerkinVector apply_mass(const Kernel& k, std::span<const double> rho, const GalerkinVector& c) {
  GalerkinVector out;
  for (int i = 0; i < k.d; ++i) {
    auto s = k.synthesize(c.components[i]);
    for (std::size_t p = 0; p < s.size(); ++p) s[p] *= rho[p];
    out.components.push_back(k.gather(k.fwd(s)));
  }
  return out;
}

// A c with (A u)_m = μ|k|²u_m + (μ/3 + η) k (k·u_m), the negative of div S.
GalerkinVector apply_viscous(const Kernel& k, const ModelParams& p, const GalerkinVector& c) {
  GalerkinVector out = zeros_like(k);
  const double lam = p.mu / 3.0 + p.eta;
  for (std::size_t g = 0; g < k.gsize(); ++g) {
    cplx kdotu{0.0, 0.0};
    for (int j = 0; j < k.d; ++j) kdotu += k.gk[g][j] * c.components[j][g];
    for (int i = 0; i < k.d; ++i)
      out.components[i][g] = p.mu * k.gk2[g] * c.components[i][g] + lam * k.gk[g][i] * kdotu;
  }
  return out;
}

// Preconditioned CG for (M[ρ] + τA) c = b in the real pairing.
GalerkinVector solve_momentum(const Kernel& k, std::span<const double> rho, const ModelParams& p,
                              double tau, const GalerkinVector& b, const GalerkinVector* guess) {
  require_conditioned(rho);
  double rho_bar = 0.0;
  for (double r : rho) rho_bar += r;
  rho_bar /= static_cast<double>(rho.size());
  const double lam = tau * (p.mu / 3.0 + p.eta);

  auto apply = [&](const GalerkinVector& c) {
    GalerkinVector y = apply_mass(k, rho, c);
    if (tau > 0.0) y.axpy(tau, apply_viscous(k, p, c));
    return y;
  };
  // Per-mode inverse of ρ̄I + τ(μ|k|²I + (μ/3+η)kkᵀ) by Sherman–Morrison.
  auto precondition = [&](const GalerkinVector& r) {
    GalerkinVector z = zeros_like(k);
    for (std::size_t g = 0; g < k.gsize(); ++g) {
      const double alpha = rho_bar + tau * p.mu * k.gk2[g];
      cplx kr{0.0, 0.0};
      for (int j = 0; j < k.d; ++j) kr += k.gk[g][j] * r.components[j][g];
      const double coef = lam / (alpha + lam * k.gk2[g]);
      for (int i = 0; i < k.d; ++i)
        z.components[i][g] = (r.components[i][g] - coef * k.gk[g][i] * kr) / alpha;
    }
    return z;
  };

  GalerkinVector x = guess ? *guess : zeros_like(k);
  GalerkinVector r = b;
  if (guess) r.axpy(-1.0, apply(x));
  const double bnorm = std::sqrt(b.dot(b));
  if (bnorm == 0.0) return zeros_like(k);
  const double tol = 1e-13 * bnorm;
  GalerkinVector z = precondition(r);
  GalerkinVector dir = z;
  double rz = r.dot(z);
  const int max_iter = 300;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(r.dot(r)) <= tol) return x;
    const GalerkinVector ad = apply(dir);
    const double alpha = rz / dir.dot(ad);
    x.axpy(alpha, dir);
    r.axpy(-alpha, ad);
    z = precondition(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < k.d; ++i)
      for (std::size_t g = 0; g < k.gsize(); ++g)
        dir.components[i][g] = z.components[i][g] + beta * dir.components[i][g];
  }
  if (std::sqrt(r.dot(r)) > 1e-10 * bnorm)
    throw SolverFailure("momentum solve did not converge");
  return x;
}

// Everything the drift needs at one state, computed once.
struct Snapshot {
  std::span<const double> rho;
  std::vector<std::vector<double>> u;  // velocity samples
  std::vector<std::vector<double>> q;  // ρu samples
  std::vector<std::vector<cplx>> qhat;
  GalerkinVector cu;                   // velocity coefficients
  double h_factor = 1.0;               // H(‖u‖_{H_N} − R), 1 at the δ level
};

Snapshot snapshot(const Kernel& k, const State& s, const ModelParams& p) {
  Snapshot snap;
  snap.rho = s.rho.samples();
  for (int i = 0; i < k.d; ++i) {
    snap.u.push_back(samples_of(s.u[i]));
    std::vector<double> q(k.size);
    for (std::size_t pnt = 0; pnt < k.size; ++pnt) q[pnt] = snap.rho[pnt] * snap.u[i][pnt];
    snap.qhat.push_back(k.fwd(q));
    snap.q.push_back(std::move(q));
  }
  snap.cu = coefficients_of(k, s.u);
  if (p.level == SystemLevel::zero) snap.h_factor = cutoff_H(h_norm(snap.cu) - p.truncation_radius);
  return snap;
}

// ∂ρ/∂t in mode space.
std::vector<cplx> continuity_modes(const Kernel& k, const Snapshot& snap,
                                   std::span<const cplx> rho_modes, const ModelParams& p) {
  std::vector<cplx> out(k.size);
  const double damping = p.level == SystemLevel::zero ? 2.0 * p.epsilon : 0.0;
  for (std::size_t i = 0; i < k.size; ++i) {
    cplx div{0.0, 0.0};
    for (int a = 0; a < k.d; ++a) div += cplx{0.0, k.kd[i][a]} * snap.qhat[a][i];
    out[i] = -snap.h_factor * div - (p.epsilon * k.k2[i] + damping) * rho_modes[i];
  }
  out[0] += reaction_source(k, p, rho_modes[0].real());
  return out;
}

struct DriftTerms {
  GalerkinVector convective, pressure, artificial, viscous, eps_laplace, eps_damping;
  GalerkinVector momentum;  // Π_N(ρu)
};

DriftTerms drift_terms(const Kernel& k, const Snapshot& snap, const ModelParams& p) {
  DriftTerms t;
  const double h = snap.h_factor;
  for (int i = 0; i < k.d; ++i) t.momentum.components.push_back(k.gather(snap.qhat[i]));

  t.convective = zeros_like(k);
  t.pressure = zeros_like(k);
  t.artificial = zeros_like(k);
  if (h != 0.0) {
    // −∂_j(ρ w_j u_i) with ρ w_j u_i = h ρ u_i u_j, symmetric in (i, j).
    std::vector<double> prod(k.size);
    for (int i = 0; i < k.d; ++i)
      for (int j = i; j < k.d; ++j) {
        for (std::size_t pnt = 0; pnt < k.size; ++pnt) prod[pnt] = snap.q[i][pnt] * snap.u[j][pnt];
        const auto tm = k.fwd(prod);
        auto ci = k.gather_derivative(tm, j, -h);
        for (std::size_t g = 0; g < ci.size(); ++g) t.convective.components[i][g] += ci[g];
        if (j != i) {
          auto cj = k.gather_derivative(tm, i, -h);
          for (std::size_t g = 0; g < cj.size(); ++g) t.convective.components[j][g] += cj[g];
        }
      }
    std::vector<double> pr(k.size);
    for (std::size_t pnt = 0; pnt < k.size; ++pnt) pr[pnt] = p.a * std::pow(snap.rho[pnt], p.gamma);
    const auto ph = k.fwd(pr);
    for (int i = 0; i < k.d; ++i) t.pressure.components[i] = k.gather_derivative(ph, i, -h);
    if (p.delta > 0.0) {
      for (std::size_t pnt = 0; pnt < k.size; ++pnt)
        pr[pnt] = p.delta * std::pow(snap.rho[pnt], p.Gamma);
      const auto ah = k.fwd(pr);
      for (int i = 0; i < k.d; ++i) t.artificial.components[i] = k.gather_derivative(ah, i, -h);
    }
  }

  t.viscous = zeros_like(k).axpy(-1.0, apply_viscous(k, p, snap.cu));
  t.eps_laplace = zeros_like(k);
  t.eps_damping = zeros_like(k);
  for (int i = 0; i < k.d; ++i)
    for (std::size_t g = 0; g < k.gsize(); ++g) {
      t.eps_laplace.components[i][g] = -p.epsilon * k.gk2[g] * t.momentum.components[i][g];
      if (p.level == SystemLevel::zero)
        t.eps_damping.components[i][g] = -2.0 * p.epsilon * t.momentum.components[i][g];
    }
  return t;
}

// Coefficients of Π_N(Σ_k w_k g_k) with g evaluated at the state.
GalerkinVector projected_noise_sum(const Kernel& k, const State& s, const NoiseModel& noise,
                                   std::span<const double> weights) {
  const auto g = noise.family->evaluate_fields(s.rho, s.q);
  GalerkinVector out;
  for (int i = 0; i < k.d; ++i) {
    std::vector<double> acc(k.size, 0.0);
    for (std::size_t kk = 0; kk < g.size(); ++kk) {
      if (weights[kk] == 0.0) continue;
      const auto gs = g[kk][i].samples();
      for (std::size_t pnt = 0; pnt < k.size; ++pnt) acc[pnt] += weights[kk] * gs[pnt];
    }
    out.components.push_back(k.gather(k.fwd(acc)));
  }
  return out;
}

SpectralVectorField field_from(const Kernel& k, const GalerkinVector& c,
                               std::vector<std::vector<double>>* samples_out = nullptr) {
  std::vector<SpectralField> comps;
  for (int i = 0; i < k.d; ++i) {
    auto modes = k.scatter(c.components[i]);
    auto samples = k.inv(modes);
    if (samples_out) samples_out->push_back(samples);
    comps.push_back(SpectralField::from_both(k.grid, std::move(samples), std::move(modes)));
  }
  return SpectralVectorField(std::move(comps));
}

SpectralVectorField product_field(const Kernel& k, std::span<const double> rho,
                                  const SpectralVectorField& u) {
  std::vector<SpectralField> comps;
  for (int i = 0; i < k.d; ++i) {
    const auto us = u[i].samples();
    std::vector<double> q(k.size);
    for (std::size_t p = 0; p < k.size; ++p) q[p] = rho[p] * us[p];
    comps.push_back(SpectralField::from_samples(k.grid, std::move(q)));
  }
  return SpectralVectorField(std::move(comps));
}

// One step of size dt without retries.
State attempt(const Kernel& k, const State& s, const ModelParams& p, const NoiseModel& noise,
              double dt, std::span<const double> dW, bool symmetric) {
  require_positive(s.rho.samples());
  const Snapshot snap = snapshot(k, s, p);
  const auto rho_modes = s.rho.modes();

  // Continuity: transport and source explicit, εΔ and −2ερ implicit.
  const double damping = p.level == SystemLevel::zero ? 2.0 * p.epsilon : 0.0;
  std::vector<cplx> rho_new(k.size);
  for (std::size_t i = 0; i < k.size; ++i) {
    cplx div{0.0, 0.0};
    for (int a = 0; a < k.d; ++a) div += cplx{0.0, k.kd[i][a]} * snap.qhat[a][i];
    rho_new[i] = rho_modes[i] - dt * snap.h_factor * div;
  }
  rho_new[0] += dt * reaction_source(k, p, rho_modes[0].real());
  for (std::size_t i = 0; i < k.size; ++i) rho_new[i] /= 1.0 + dt * (p.epsilon * k.k2[i] + damping);
  auto rho_samples = k.inv(rho_new);
  require_positive(rho_samples);

  // Momentum: viscous implicit, everything else explicit at the left point.
  const DriftTerms t = drift_terms(k, snap, p);
  GalerkinVector rhs = t.momentum;
  rhs.axpy(dt, t.convective).axpy(dt, t.pressure).axpy(dt, t.artificial);
  rhs.axpy(dt, t.eps_laplace).axpy(dt, t.eps_damping);
  if (noise.size() > 0) rhs += apply_mass(k, snap.rho, projected_noise_sum(k, s, noise, dW));

  const GalerkinVector c = solve_momentum(k, rho_samples, p, dt, rhs, &snap.cu);

  SpectralField rho_field = SpectralField::from_both(k.grid, std::move(rho_samples), std::move(rho_new));
  SpectralVectorField u_field = field_from(k, c);
  if (symmetric) return make_state(s.t + dt, symmetry_project(rho_field), symmetry_project(u_field));

  State out;
  out.t = s.t + dt;
  out.q = product_field(k, rho_field.samples(), u_field);
  out.rho = std::move(rho_field);
  out.u = std::move(u_field);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

State step_with_retries(const Kernel& k, const State& s, const ModelParams& p,
                        const NoiseModel& noise, const StepperConfig& config, double dt,
                        std::span<const double> dW, int level, int* retries) {
  try {
    return attempt(k, s, p, noise, dt, dW, config.symmetric);
  } catch (const NegativeDensity& e) {
    if (level >= config.max_retries)
      throw SolverFailure("negative density after " + std::to_string(level) +
                          " step halvings at t = " + std::to_string(s.t) + ": " + e.what());
    if (retries) ++*retries;
    // Brownian bridge: W(t+dt/2) − W(t) given ΔW is N(ΔW/2, dt/4).
    std::uint64_t key = splitmix64(std::bit_cast<std::uint64_t>(s.t) ^ static_cast<std::uint64_t>(level));
    for (double w : dW) key = splitmix64(key ^ std::bit_cast<std::uint64_t>(w));
    std::vector<double> first(dW.size()), second(dW.size());
    for (std::size_t j = 0; j < dW.size(); ++j) {
      const double z = WienerPath::standard_normal(key, 0, j, 0, 0);
      first[j] = 0.5 * dW[j] + 0.5 * std::sqrt(dt) * z;
      second[j] = dW[j] - first[j];
    }
    const State mid = step_with_retries(k, s, p, noise, config, 0.5 * dt, first, level + 1, retries);
    return step_with_retries(k, mid, p, noise, config, 0.5 * dt, second, level + 1, retries);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

State make_state(double t, const SpectralField& rho, const SpectralVectorField& u) {
  if (u.dim() != rho.grid().dim) throw GridMismatch();
  for (int i = 0; i < u.dim(); ++i) require_same_grid(rho, u[i]);
  State s;
  s.t = t;
  s.rho = to_samples(to_modes(rho));
  const SpectralVectorField un = project_N(u, rho.grid().galerkin_cutoff);
  for (int i = 0; i < un.dim(); ++i) s.u.components.push_back(to_samples(to_modes(un[i])));
  s.q = product_field(kernel_for(rho.grid()), s.rho.samples(), s.u);
  return s;
}

State default_initial_state(const TorusGrid& grid, const ModelParams& params) {
  grid.validate();
  return make_state(0.0, SpectralField::constant(grid, params.total_mass / grid.volume()),
                    SpectralVectorField::zeros(grid));
}

GalerkinBasis::GalerkinBasis(const TorusGrid& grid)
    : grid_(grid), indices_(galerkin_indices(grid)), sqrt_volume_(std::sqrt(grid.volume())) {}

std::vector<cplx> GalerkinBasis::coefficients(const SpectralField& f) const {
  if (!(f.grid() == grid_)) throw GridMismatch();
  const auto m = modes_of(f);
  return coefficients_from_modes(m);
}

std::vector<cplx> GalerkinBasis::coefficients_from_modes(std::span<const cplx> modes) const {
  std::vector<cplx> c(indices_.size());
  for (std::size_t g = 0; g < c.size(); ++g) c[g] = sqrt_volume_ * modes[indices_[g]];
  return c;
}

std::vector<cplx> GalerkinBasis::modes(std::span<const cplx> coefficients) const {
  if (coefficients.size() != indices_.size()) throw GridMismatch();
  std::vector<cplx> m(grid_.size(), cplx{0.0, 0.0});
  for (std::size_t g = 0; g < coefficients.size(); ++g) m[indices_[g]] = coefficients[g] / sqrt_volume_;
  return m;
}

SpectralField GalerkinBasis::field(std::span<const cplx> coefficients) const {
  return to_samples(SpectralField::from_modes(grid_, modes(coefficients)));
}

GalerkinVector GalerkinVector::zeros(int dim, std::size_t size) {
  GalerkinVector v;
  v.components.assign(static_cast<std::size_t>(dim), std::vector<cplx>(size, cplx{0.0, 0.0}));
  return v;
}

GalerkinVector& GalerkinVector::operator+=(const GalerkinVector& o) { return axpy(1.0, o); }

GalerkinVector& GalerkinVector::axpy(double s, const GalerkinVector& o) {
  if (o.components.size() != components.size()) throw GridMismatch();
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (o.components[i].size() != components[i].size()) throw GridMismatch();
    for (std::size_t g = 0; g < components[i].size(); ++g) components[i][g] += s * o.components[i][g];
  }
  return *this;
}

double GalerkinVector::dot(const GalerkinVector& o) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i)
    for (std::size_t g = 0; g < components[i].size(); ++g)
      acc += components[i][g].real() * o.components[i][g].real() +
             components[i][g].imag() * o.components[i][g].imag();
  return acc;
}

GalerkinVector momentum_functionals(const SpectralField& rho, const SpectralVectorField& u) {
  const Kernel& k = kernel_for(rho.grid());
  const auto rs = samples_of(rho);
  GalerkinVector m;
  for (int i = 0; i < k.d; ++i) {
    require_same_grid(rho, u[i]);
    auto us = samples_of(u[i]);
    for (std::size_t p = 0; p < k.size; ++p) us[p] *= rs[p];
    m.components.push_back(k.gather(k.fwd(us)));
  }
  return m;
}

GalerkinVector galerkin_coefficients(const SpectralVectorField& v) {
  return coefficients_of(kernel_for(v.grid()), v);
}

SpectralVectorField galerkin_field(const TorusGrid& grid, const GalerkinVector& c) {
  return field_from(kernel_for(grid), c);
}

double WienerPath::standard_normal(std::uint64_t seed, std::uint64_t member, std::uint64_t mode,
                                   std::uint64_t step, std::uint64_t lane) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ member);
  h = splitmix64(h ^ mode);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ lane);
  const std::uint64_t a = splitmix64(h ^ 0x1ULL);
  const std::uint64_t b = splitmix64(h ^ 0x2ULL);
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;         // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double WienerPath::increment(std::int64_t step, int k) const {
  return std::sqrt(dt_) * standard_normal(seed_, member_, static_cast<std::uint64_t>(k),
                                          static_cast<std::uint64_t>(step), 0);
}

std::vector<double> WienerPath::increments(std::int64_t step) const {
  std::vector<double> w(static_cast<std::size_t>(modes_));
  for (int k = 0; k < modes_; ++k) w[static_cast<std::size_t>(k)] = increment(step, k);
  return w;
}

void StepperConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "Δt > 0 required");
  if (max_retries < 0) throw ConfigError("max_retries", "max_retries ≥ 0 required");
}

SpectralField continuity_rhs(const State& state, const ModelParams& params) {
  const Kernel& k = kernel_for(state.grid());
  const Snapshot snap = snapshot(k, state, params);
  return to_samples(SpectralField::from_modes(k.grid, continuity_modes(k, snap, state.rho.modes(), params)));
}

GalerkinVector MomentumDrift::total() const {
  GalerkinVector t = convective;
  t += pressure;
  t += artificial_pressure;
  t += viscous;
  t += eps_laplace;
  t += eps_damping;
  return t;
}

MomentumDrift momentum_drift(const State& state, const ModelParams& params) {
  const Kernel& k = kernel_for(state.grid());
  require_nonnegative(state.rho);
  const Snapshot snap = snapshot(k, state, params);
  DriftTerms t = drift_terms(k, snap, params);
  return {std::move(t.convective), std::move(t.pressure), std::move(t.artificial),
          std::move(t.viscous),    std::move(t.eps_laplace), std::move(t.eps_damping)};
}

std::vector<GalerkinVector> noise_projections(const State& state, const NoiseModel& noise) {
  std::vector<GalerkinVector> out;
  if (noise.size() == 0) return out;
  require_nonnegative(state.rho);
  const Kernel& k = kernel_for(state.grid());
  const auto g = noise.family->evaluate_fields(state.rho, state.q);
  for (const auto& gk : g) {
    GalerkinVector c;
    for (int i = 0; i < k.d; ++i) c.components.push_back(k.gather(k.fwd(gk[i].samples())));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<GalerkinVector> noise_functionals(const State& state, const NoiseModel& noise) {
  auto proj = noise_projections(state, noise);
  const Kernel& k = kernel_for(state.grid());
  for (auto& c : proj) c = apply_mass(k, state.rho.samples(), c);
  return proj;
}

GalerkinVector MomentumIncrement::total(double dt) const {
  GalerkinVector t = noise;
  t.axpy(dt, drift);
  return t;
}

MomentumIncrement momentum_rhs_weak(const State& state, const ModelParams& params,
                                    const NoiseModel& noise, std::span<const double> dW) {
  if (dW.size() != static_cast<std::size_t>(noise.size()))
    throw DomainError("momentum_rhs_weak: expected " + std::to_string(noise.size()) +
                      " Wiener increments, got " + std::to_string(dW.size()));
  const Kernel& k = kernel_for(state.grid());
  MomentumIncrement inc;
  inc.drift = momentum_drift(state, params).total();
  inc.noise = noise.size() > 0
                  ? apply_mass(k, state.rho.samples(), projected_noise_sum(k, state, noise, dW))
                  : zeros_like(k);
  return inc;
}

SpectralVectorField recover_velocity(const SpectralField& rho, const GalerkinVector& momentum,
                                     const ModelParams& params, double viscous_dt) {
  const Kernel& k = kernel_for(rho.grid());
  if (static_cast<int>(momentum.components.size()) != k.d) throw GridMismatch();
  const auto rs = samples_of(rho);
  const GalerkinVector c = solve_momentum(k, rs, params, viscous_dt, momentum, nullptr);
  return field_from(k, c);
}

State em_step(const State& state, const ModelParams& params, const NoiseModel& noise,
              const StepperConfig& config, std::span<const double> dW, int* retries) {
  config.validate();
  if (dW.size() != static_cast<std::size_t>(noise.size()))
    throw DomainError("em_step: expected " + std::to_string(noise.size()) +
                      " Wiener increments, got " + std::to_string(dW.size()));
  const Kernel& k = kernel_for(state.grid());
  return step_with_retries(k, state, params, noise, config, config.dt, dW, 0, retries);
}

IndexRow index_row(const State& state, const ModelParams& params) {
  const TorusGrid& g = state.grid();
  const auto rho = state.rho.samples();
  const double w = g.cell_volume();
  IndexRow row;
  row.t = state.t;
  row.min_rho = *std::min_element(rho.begin(), rho.end());
  double mass = 0.0, kin = 0.0, pot = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    mass += rho[p];
    double u2 = 0.0;
    for (int i = 0; i < g.dim; ++i) {
      const double ui = state.u[i].samples()[p];
      u2 += ui * ui;
    }
    kin += 0.5 * rho[p] * u2;
    const double r = std::max(rho[p], 0.0);
    pot += params.a / (params.gamma - 1.0) * std::pow(r, params.gamma);
    if (params.delta > 0.0) pot += params.delta / (params.Gamma - 1.0) * std::pow(r, params.Gamma);
  }
  row.mass = mass * w;
  row.kinetic = kin * w;
  row.energy = (kin + pot) * w;
  row.sobolev12_sq = sobolev12_sq(state.u);
  return row;
}

std::vector<double> TrajectoryRecord::summed_increments(std::int64_t from, std::int64_t to) const {
  std::vector<double> sum(static_cast<std::size_t>(noise_modes), 0.0);
  const std::int64_t total = noise_modes > 0
                                 ? static_cast<std::int64_t>(increments.size()) / noise_modes
                                 : 0;
  if (from < 0 || to > total || from > to) throw WindowError("increment range outside record");
  for (std::int64_t s = from; s < to; ++s)
    for (int k = 0; k < noise_modes; ++k)
      sum[static_cast<std::size_t>(k)] +=
          increments[static_cast<std::size_t>(s * noise_modes + k)];
  return sum;
}

std::optional<std::size_t> TrajectoryRecord::find_time(double t) const {
  const double tol = dt > 0.0 ? 0.5 * dt : 1e-12;
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end() || std::abs(*it - t) > tol) return std::nullopt;
  return static_cast<std::size_t>(it - times.begin());
}

TrajectoryRecord simulate(const State& initial, double horizon, const ModelParams& params,
                          const NoiseModel& noise, const StepperConfig& config,
                          std::uint64_t seed, std::uint64_t member, const RecordOptions& options) {
  if (!(horizon >= 0.0)) throw DomainError("simulate requires T ≥ 0");
  config.validate();
  const std::int64_t steps = std::llround(horizon / config.dt);
  const WienerPath path(seed, member, noise.size(), config.dt);
  std::vector<double> increments;
  increments.reserve(static_cast<std::size_t>(steps * noise.size()));
  for (std::int64_t s = 0; s < steps; ++s) {
    const auto dW = path.increments(s);
    increments.insert(increments.end(), dW.begin(), dW.end());
  }
  return simulate_with_increments(initial, horizon, params, noise, config, increments, seed, member, options);
}

TrajectoryRecord simulate_with_increments(const State& initial, double horizon,
                                          const ModelParams& params, const NoiseModel& noise,
                                          const StepperConfig& config,
                                          std::span<const double> increments, std::uint64_t seed,
                                          std::uint64_t member, const RecordOptions& options) {
  if (!(horizon >= 0.0)) throw DomainError("simulate requires T ≥ 0");
  config.validate();
  const TorusGrid& grid = initial.grid();
  grid.validate();
  params.validate(grid.dim);
  if (options.state_stride < 1 || options.index_stride < 1)
    throw ConfigError("stride", "strides must be ≥ 1");
  const std::int64_t steps = std::llround(horizon / config.dt);
  const auto K = static_cast<std::size_t>(noise.size());
  if (increments.size() != static_cast<std::size_t>(steps) * K)
    throw DomainError("simulate: increment count does not match steps × K");

  TrajectoryRecord rec;
  rec.grid = grid;
  rec.params = params;
  rec.dt = config.dt;
  rec.stride = options.state_stride;
  rec.seed = seed;
  rec.member = member;
  rec.noise_modes = noise.size();
  rec.symmetric = config.symmetric;
  rec.max_retries = config.max_retries;
  rec.increments.assign(increments.begin(), increments.end());

  const double t0 = initial.t;
  State cur = config.symmetric
                  ? make_state(t0, symmetry_project(initial.rho), symmetry_project(initial.u))
                  : make_state(t0, initial.rho, initial.u);

  rec.health.min_rho = std::numeric_limits<double>::infinity();
  auto track = [&](const State& s, bool full) {
    const auto r = s.rho.samples();
    rec.health.min_rho = std::min(rec.health.min_rho, *std::min_element(r.begin(), r.end()));
    if (full && options.track_symmetry)
      rec.health.max_symmetry_defect =
          std::max(rec.health.max_symmetry_defect, symmetry_defect(s.rho, s.u));
  };
  track(cur, true);
  rec.times.push_back(cur.t);
  rec.steps.push_back(0);
  rec.states.push_back(cur);
  rec.index.push_back(index_row(cur, params));

  for (std::int64_t s = 0; s < steps; ++s) {
    const std::span<const double> dW(rec.increments.data() + static_cast<std::size_t>(s) * K, K);
    cur = em_step(cur, params, noise, config, dW, &rec.health.retries);
    cur.t = t0 + static_cast<double>(s + 1) * config.dt;
    const bool last = s + 1 == steps;
    const bool keep = (options.keep_step ? options.keep_step(s + 1) : (s + 1) % options.state_stride == 0) || last;
    track(cur, keep);
    if (keep) {
      rec.times.push_back(cur.t);
      rec.steps.push_back(s + 1);
      rec.states.push_back(cur);
    }
    if ((s + 1) % options.index_stride == 0 || last) rec.index.push_back(index_row(cur, params));
  }
  rec.health.positivity_ok = rec.health.min_rho > 0.0;
  return rec;
}

State replay(const TrajectoryRecord& record, const NoiseModel& noise, std::size_t from, std::size_t to,
             const StepVisitor& visit) {
  if (from > to || to >= record.states.size()) throw WindowError("replay range outside record");
  if (noise.size() != record.noise_modes) throw DomainError("replay: noise model does not match record");
  StepperConfig cfg;
  cfg.dt = record.dt;
  cfg.symmetric = record.symmetric;
  cfg.max_retries = record.max_retries;
  const auto K = static_cast<std::size_t>(record.noise_modes);
  const double t0 = record.times.front() - static_cast<double>(record.steps.front()) * record.dt;
  State cur = record.states[from];
  for (std::int64_t s = record.steps[from]; s < record.steps[to]; ++s) {
    const std::span<const double> dW(record.increments.data() + static_cast<std::size_t>(s) * K, K);
    if (visit) visit(s, cur, dW);
    cur = em_step(cur, record.params, noise, cfg, dW);
    cur.t = t0 + static_cast<double>(s + 1) * record.dt;
  }
  return cur;
}

}  // namespace scns
