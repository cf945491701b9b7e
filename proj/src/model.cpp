#include "scns/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scns/errors.hpp"
#include "scns/spectral.hpp"

namespace scns {

void ModelParams::validate(int dim) const {
  if (!(a > 0.0)) throw ConfigError("model.a", "a > 0 required");
  if (dim == 3 && !(gamma > 1.5)) throw ConfigError("model.gamma", "γ > 3/2 required for d=3");
  if (dim < 3 && !(gamma > 1.0)) throw ConfigError("model.gamma", "γ > 1 required for d<=2");
  if (!(mu > 0.0)) throw ConfigError("model.mu", "μ > 0 required");
  if (!(eta >= 0.0)) throw ConfigError("model.eta", "η >= 0 required");
  if (!(total_mass > 0.0)) throw ConfigError("model.M0", "M₀ > 0 required");
  if (!(epsilon >= 0.0)) throw ConfigError("model.epsilon", "ε >= 0 required");
  if (!(delta >= 0.0)) throw ConfigError("model.delta", "δ >= 0 required");
  if (delta > 0.0 && !(Gamma > std::max(4.5, gamma))) {
    throw ConfigError("model.Gamma", "Γ > max{9/2, γ} required when δ > 0");
  }
  if (!(truncation_radius > 0.0)) throw ConfigError("model.R", "R > 0 required");
  if (noise_modes < 0) throw ConfigError("noise.K", "K >= 0 required");
}

double cutoff_H(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  // φ(1−x)/(φ(x)+φ(1−x)) = 1/(1 + e^{1/(1−x) − 1/x})
  return 1.0 / (1.0 + std::exp(1.0 / (1.0 - x) - 1.0 / x));
}

double cutoff_H_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double h = cutoff_H(x);
  const double de = 1.0 / ((1.0 - x) * (1.0 - x)) + 1.0 / (x * x);
  return -h * (1.0 - h) * de;
}

void require_nonnegative(const SpectralField& rho) {
  const auto s = samples_of(rho);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0)) throw NegativeDensity(i, s[i]);
  }
}

SpectralField pressure(const SpectralField& rho, const ModelParams& params) {
  require_nonnegative(rho);
  const double a = params.a, g = params.gamma, d = params.delta, G = params.Gamma;
  return pointwise_map(rho, [=](double r) {
    double p = a * std::pow(r, g);
    if (d != 0.0) p += d * std::pow(r, G);
    return p;
  });
}

MatrixField stress(const MatrixField& grad, const ModelParams& params) {
  const int d = grad.dim;
  const TorusGrid& g = grad.entries.front().grid();
  std::vector<std::vector<double>> gs;
  for (const auto& e : grad.entries) gs.push_back(samples_of(e));
  std::vector<double> div(g.size(), 0.0);
  for (int i = 0; i < d; ++i) {
    const auto& gii = gs[static_cast<std::size_t>(i * d + i)];
    for (std::size_t p = 0; p < div.size(); ++p) div[p] += gii[p];
  }
  MatrixField out;
  out.dim = d;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const auto& gij = gs[static_cast<std::size_t>(i * d + j)];
      const auto& gji = gs[static_cast<std::size_t>(j * d + i)];
      std::vector<double> s(g.size());
      for (std::size_t p = 0; p < s.size(); ++p) {
        double v = params.mu * (gij[p] + gji[p]);
        if (i == j) v += (params.eta - 2.0 / 3.0 * params.mu) * div[p];
        s[p] = v;
      }
      out.entries.push_back(SpectralField::from_samples(g, std::move(s)));
    }
  }
  return out;
}

double truncation_factor(const SpectralVectorField& u, double radius) {
  return cutoff_H(h_n_norm(u) - radius);
}

SpectralVectorField truncate_velocity(const SpectralVectorField& u, double radius) {
  return truncation_factor(u, radius) * u;
}

double solve_M_epsilon(double epsilon, double total_mass) {
  if (!(epsilon > 0.0)) throw DomainError("solve_M_epsilon requires ε > 0");
  if (!(total_mass > 0.0)) throw DomainError("solve_M_epsilon requires M₀ > 0");
  // g(M) = 2εM − H(M/M₀) is strictly increasing, g(0) = −1, g(M₀) = 2εM₀ > 0.
  double lo = 0.0, hi = total_mass;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * total_mass; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (2.0 * epsilon * mid - cutoff_H(mid / total_mass) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

std::vector<SpectralVectorField> NoiseFamily::evaluate_fields(const SpectralField& rho,
                                                              const SpectralVectorField& q) const {
  const TorusGrid& g = rho.grid();
  const auto rs = samples_of(rho);
  std::vector<std::vector<double>> qs;
  for (int c = 0; c < q.dim(); ++c) qs.push_back(samples_of(q[c]));
  std::vector<SpectralVectorField> out;
  for (int k = 0; k < size(); ++k) {
    std::vector<std::vector<double>> comp(static_cast<std::size_t>(g.dim),
                                          std::vector<double>(g.size()));
    for (std::size_t p = 0; p < g.size(); ++p) {
      std::array<double, 3> qv{0.0, 0.0, 0.0};
      for (int c = 0; c < q.dim(); ++c) qv[c] = qs[c][p];
      const auto v = evaluate(k, g.point(p), rs[p], qv);
      for (int c = 0; c < g.dim; ++c) comp[c][p] = v[c];
    }
    std::vector<SpectralField> f;
    for (auto& c : comp) f.push_back(SpectralField::from_samples(g, std::move(c)));
    out.emplace_back(std::move(f));
  }
  return out;
}

std::vector<std::array<int, 3>> enumerate_wave_vectors(int dim, int count) {
  std::vector<std::array<int, 3>> out;
  for (int s = 1; static_cast<int>(out.size()) < count; ++s) {
    std::vector<std::array<int, 3>> shell;
    std::array<int, 3> v{0, 0, 0};
    // All κ with Σκ_a = s.
    for (v[0] = s; v[0] >= 0; --v[0]) {
      if (dim == 1) {
        if (v[0] == s) shell.push_back(v);
        continue;
      }
      for (v[1] = s - v[0]; v[1] >= 0; --v[1]) {
        if (dim == 2) {
          if (v[0] + v[1] == s) shell.push_back(v);
          continue;
        }
        v[2] = s - v[0] - v[1];
        shell.push_back(v);
      }
    }
    std::sort(shell.begin(), shell.end(), std::greater<>());
    for (const auto& w : shell) {
      if (static_cast<int>(out.size()) < count) out.push_back(w);
    }
  }
  return out;
}

TrigParityNoise::TrigParityNoise(const TorusGrid& grid, int modes, double amplitude_scale)
    : grid_(grid), wave_vectors_(enumerate_wave_vectors(grid.dim, modes)) {
  for (int k = 0; k < modes; ++k) amplitudes_.push_back(amplitude_scale / (k + 1));
  const double w = 2.0 * std::numbers::pi / grid.length;
  spatial_.resize(static_cast<std::size_t>(modes));
  for (int k = 0; k < modes; ++k) {
    const auto& kap = wave_vectors_[static_cast<std::size_t>(k)];
    auto& sk = spatial_[static_cast<std::size_t>(k)];
    sk.assign(static_cast<std::size_t>(grid.dim), std::vector<double>(grid.size()));
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto x = grid.point(p);
      for (int i = 0; i < grid.dim; ++i) {
        double v = std::sin(w * kap[i] * x[i]);
        for (int j = 0; j < grid.dim; ++j) {
          if (j != i) v *= std::cos(w * kap[j] * x[j]);
        }
        sk[i][p] = v;
      }
    }
  }
}

std::array<double, 3> TrigParityNoise::evaluate(int k, const std::array<double, 3>& x, double rho,
                                                const std::array<double, 3>& /*q*/) const {
  const auto& kap = wave_vectors_[static_cast<std::size_t>(k)];
  const double w = 2.0 * std::numbers::pi / grid_.length;
  const double s = amplitudes_[static_cast<std::size_t>(k)] * sigma(rho);
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int i = 0; i < grid_.dim; ++i) {
    double v = std::sin(w * kap[i] * x[i]);
    for (int j = 0; j < grid_.dim; ++j) {
      if (j != i) v *= std::cos(w * kap[j] * x[j]);
    }
    out[i] = s * v;
  }
  return out;
}

std::vector<SpectralVectorField> TrigParityNoise::evaluate_fields(
    const SpectralField& rho, const SpectralVectorField& /*q*/) const {
  if (!(rho.grid() == grid_)) throw GridMismatch();
  const auto rs = samples_of(rho);
  std::vector<double> sig(rs.size());
  for (std::size_t p = 0; p < rs.size(); ++p) sig[p] = sigma(rs[p]);
  std::vector<SpectralVectorField> out;
  for (int k = 0; k < size(); ++k) {
    const double alpha = amplitudes_[static_cast<std::size_t>(k)];
    std::vector<SpectralField> comps;
    for (int i = 0; i < grid_.dim; ++i) {
      const auto& sp = spatial_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      std::vector<double> v(rs.size());
      for (std::size_t p = 0; p < v.size(); ++p) v[p] = alpha * sig[p] * sp[p];
      comps.push_back(SpectralField::from_samples(grid_, std::move(v)));
    }
    out.emplace_back(std::move(comps));
  }
  return out;
}

NoiseModel NoiseModel::trig_parity(const TorusGrid& grid, int modes, double amplitude_scale) {
  return {std::make_shared<TrigParityNoise>(grid, modes, amplitude_scale)};
}

double NoiseModel::total_intensity() const {
  double g = 0.0;
  for (int k = 0; k < size(); ++k) g += family->amplitude(k) * family->amplitude(k);
  return g;
}

std::vector<SpectralVectorField> noise_eval(const NoiseModel& model, const SpectralField& rho,
                                            const SpectralVectorField& q) {
  require_nonnegative(rho);
  if (!model.family) return {};
  auto g = model.family->evaluate_fields(rho, q);
  for (auto& gk : g) gk = scale_pointwise(rho, gk);
  return g;
}

}  // namespace scns
