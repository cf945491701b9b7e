#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "scns/errors.hpp"
#include "scns/model.hpp"
#include "scns/spectral.hpp"

using namespace scns;

namespace {

TorusGrid grid2(int n = 16, int cutoff = 3) {
  TorusGrid g;
  g.dim = 2;
  g.n = n;
  g.galerkin_cutoff = cutoff;
  return g;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter validation names the violated constraint") {
  ModelParams p;
  CHECK_NOTHROW(p.validate(2));
  p.gamma = 1.2;
  CHECK_NOTHROW(p.validate(2));
  try {
    p.validate(3);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "model.gamma");
    CHECK(std::string(e.what()).find("γ > 3/2 required for d=3") != std::string::npos);
  }
  p = ModelParams{};
  p.delta = 0.1;
  p.Gamma = 4.0;
  CHECK_THROWS_AS(p.validate(2), ConfigError);
  p.Gamma = 6.0;
  CHECK_NOTHROW(p.validate(2));
  p = ModelParams{};
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(2), ConfigError);
  p = ModelParams{};
  p.eta = -1.0;
  CHECK_THROWS_AS(p.validate(2), ConfigError);
  p = ModelParams{};
  p.total_mass = 0.0;
  CHECK_THROWS_AS(p.validate(2), ConfigError);
}

TEST_CASE("cutoff H") {
  CHECK(cutoff_H(-3.0) == 1.0);
  CHECK(cutoff_H(0.0) == 1.0);
  CHECK(cutoff_H(1.0) == 0.0);
  CHECK(cutoff_H(7.0) == 0.0);
  CHECK(cutoff_H(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  double prev = 2.0;
  for (int i = -100; i <= 1100; ++i) {
    const double x = i / 1000.0;
    const double h = cutoff_H(x);
    CHECK(h <= prev);
    CHECK(h == doctest::Approx(oracle::cutoff(x)).epsilon(1e-14));
    if (x > 0.05 && x < 0.95) CHECK(h < prev);  // H rounds to 0 or 1 in double near the ends
    prev = h;
  }
  // Derivative against a central difference; vanishes at the junctions.
  for (double x : {0.1, 0.3, 0.5, 0.77}) {
    const double fd = (cutoff_H(x + 1e-6) - cutoff_H(x - 1e-6)) / 2e-6;
    CHECK(cutoff_H_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK(cutoff_H_derivative(0.0) == 0.0);
  CHECK(cutoff_H_derivative(1.0) == 0.0);
}

TEST_CASE("pressure") {
  const auto g = grid2();
  ModelParams p;
  p.a = 1.0;
  p.gamma = 2.0;
  p.delta = 0.0;
  const auto pr = pressure(SpectralField::constant(g, 2.0), p);
  for (double v : samples_of(pr)) CHECK(v == doctest::Approx(4.0));
  for (double v : samples_of(pressure(SpectralField::zeros(g), p))) CHECK(v == 0.0);

  std::vector<double> bad(g.size(), 1.0);
  bad[7] = -0.25;
  try {
    (void)pressure(SpectralField::from_samples(g, bad), p);
    FAIL("expected NegativeDensity");
  } catch (const NegativeDensity& e) {
    CHECK(e.location() == 7);
    CHECK(e.value() == -0.25);
  }

  // γ = 5/3 on a smooth density: the collocation integral vs a refined midpoint rule.
  const auto gg = grid2(64, 15);
  p.gamma = 5.0 / 3.0;
  const double w = 2.0 * oracle::pi / gg.length;
  auto rho_fn = [&](const std::array<double, 3>& x) { return 1.0 + 0.1 * std::cos(w * x[0]); };
  const double got = integral(pressure(SpectralField::from_function(gg, rho_fn), p));
  const double ref =
      oracle::refined_integral(gg, [&](const auto& x) { return std::pow(rho_fn(x), p.gamma); }, 512);
  CHECK(got == doctest::Approx(ref).epsilon(1e-10));

  p.delta = 0.5;
  p.Gamma = 6.0;
  const auto pd = pressure(SpectralField::constant(g, 2.0), p);
  CHECK(samples_of(pd)[3] == doctest::Approx(std::pow(2.0, 5.0 / 3.0) + 0.5 * 64.0));
}

TEST_CASE("stress") {
  const auto g = grid2();
  ModelParams p;
  p.mu = 1.3;
  p.eta = 0.4;
  const auto zero = stress(MatrixField::zeros(g), p);
  for (const auto& e : zero.entries) CHECK(max_abs(e) == 0.0);

  // Pure rotation: antisymmetric constant gradient.
  MatrixField rot = MatrixField::zeros(g);
  rot(0, 1) = SpectralField::constant(g, 2.0);
  rot(1, 0) = SpectralField::constant(g, -2.0);
  for (const auto& e : stress(rot, p).entries) CHECK(max_abs(e) < 1e-15);

  // Shear mode u = (sin(2πx₂/L), 0): ∫S:∇u = μ(2π/L)²|𝕋|/2.
  const auto gg = grid2(32, 7);
  SpectralVectorField u = SpectralVectorField::zeros(gg);
  const double w = 2.0 * oracle::pi / gg.length;
  u[0] = SpectralField::from_function(gg, [&](const auto& x) { return std::sin(w * x[1]); });
  const auto grad = vector_gradient(u);
  const double diss = inner(stress(grad, p), grad);
  const double ref = oracle::refined_integral(
      gg, [&](const auto& x) { return p.mu * std::pow(w * std::cos(w * x[1]), 2); }, 256);
  CHECK(diss == doctest::Approx(ref).epsilon(1e-10));
  CHECK(diss == doctest::Approx(p.mu * w * w * gg.volume() / 2.0).epsilon(1e-12));

  // Compression mode u = (sin(w x₁), 0): S:∇u = (4μ/3 + η)(div u)².
  u[0] = SpectralField::from_function(gg, [&](const auto& x) { return std::sin(w * x[0]); });
  const auto g2 = vector_gradient(u);
  CHECK(inner(stress(g2, p), g2) ==
        doctest::Approx((4.0 / 3.0 * p.mu + p.eta) * w * w * gg.volume() / 2.0).epsilon(1e-12));
}

TEST_CASE("velocity truncation") {
  const auto g = grid2();
  const double w = 2.0 * oracle::pi / g.length;
  SpectralVectorField u = SpectralVectorField::zeros(g);
  u[0] = SpectralField::from_function(g, [&](const auto& x) { return std::sin(w * x[0]); });
  const double norm = h_n_norm(u);
  auto scaled = [&](double target) { return (target / norm) * u; };

  const auto inside = scaled(2.0);
  CHECK(truncation_factor(inside, 3.0) == 1.0);
  const auto outside = scaled(4.0);
  CHECK(max_abs(truncate_velocity(outside, 3.0)[0]) == 0.0);
  const auto half = scaled(3.5);
  const auto th = truncate_velocity(half, 3.0);
  CHECK(max_abs(th[0] - 0.5 * half[0]) < 1e-14);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SpectralVectorField r = SpectralVectorField::zeros(g);
    for (int i = 0; i < 2; ++i) r[i] = oracle::random_band_limited(g, 3, rng, 3.0);
    CHECK(h_n_norm(truncate_velocity(r, 0.5)) <= h_n_norm(r) * (1 + 1e-15));
  }
}

TEST_CASE("equilibrium mass") {
  CHECK(solve_M_epsilon(0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  auto oracle_root = [](double eps, double m0) {
    return oracle::bisect([&](double m) { return 2.0 * eps * m - oracle::cutoff(m / m0); }, 0.0, m0);
  };
  CHECK(std::abs(solve_M_epsilon(0.05, 1.0) - oracle_root(0.05, 1.0)) < 1e-10);
  double prev = 0.0;
  for (double eps : {0.5, 0.1, 0.02}) {
    const double m = solve_M_epsilon(eps, 1.0);
    CHECK(std::abs(m - oracle_root(eps, 1.0)) < 1e-10);
    CHECK(m > prev);
    CHECK(m <= 1.0);
    CHECK(std::abs(2.0 * eps * m - cutoff_H(m)) < 1e-10);
    prev = m;
  }
  for (double m0 : {0.3, 2.0, 17.0}) {
    const double m = solve_M_epsilon(0.1, m0);
    CHECK(m > 0.0);
    CHECK(m <= m0);
    CHECK(std::abs(0.2 * m - cutoff_H(m / m0)) < 1e-10);
  }
  CHECK_THROWS_AS(solve_M_epsilon(0.0, 1.0), DomainError);
}

TEST_CASE("wave vector enumeration") {
  const auto v = enumerate_wave_vectors(2, 5);
  const std::vector<std::array<int, 3>> want = {{1, 0, 0}, {0, 1, 0}, {2, 0, 0}, {1, 1, 0}, {0, 2, 0}};
  CHECK(v == want);
  const auto v3 = enumerate_wave_vectors(3, 4);
  CHECK(v3[3] == std::array<int, 3>{2, 0, 0});
  const auto v1 = enumerate_wave_vectors(1, 3);
  CHECK(v1[2] == std::array<int, 3>{3, 0, 0});
}

TEST_CASE("noise evaluation") {
  const auto g = grid2(32, 7);
  const int K = 8;
  const double A = 0.7;
  const auto noise = NoiseModel::trig_parity(g, K, A);
  CHECK(noise.size() == K);
  double G = 0.0;
  for (int k = 1; k <= K; ++k) G += A * A / (k * k);
  CHECK(noise.total_intensity() == doctest::Approx(G));

  // ρ ≡ 0 kills every coefficient.
  const auto q0 = SpectralVectorField::zeros(g);
  for (const auto& Gk : noise_eval(noise, SpectralField::zeros(g), q0))
    for (int i = 0; i < 2; ++i) CHECK(max_abs(Gk[i]) == 0.0);

  // ρ ≡ 1: closed form α_k σ(1) sin(wκ_i x_i) cos(wκ_j x_j).
  const auto G1 = noise_eval(noise, SpectralField::constant(g, 1.0), q0);
  const auto* fam = dynamic_cast<const TrigParityNoise*>(noise.family.get());
  REQUIRE(fam != nullptr);
  const double w = 2.0 * oracle::pi / g.length;
  for (int k = 0; k < K; ++k) {
    const auto kap = fam->wave_vector(k);
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      const auto ref = SpectralField::from_function(g, [&](const auto& x) {
        return A / (k + 1) * 0.5 * std::sin(w * kap[i] * x[i]) * std::cos(w * kap[j] * x[j]);
      });
      CHECK(max_abs(G1[static_cast<std::size_t>(k)][i] - ref) < 1e-15);
    }
  }

  // Bounds |G_k| ≤ ρα_k on random positive densities.
  std::mt19937_64 rng(8);
  auto rho = oracle::random_band_limited(g, 4, rng);
  rho = pointwise_map(rho, [](double v) { return 0.2 + v * v; });
  const auto Gr = noise_eval(noise, rho, q0);
  const auto rs = samples_of(rho);
  for (int k = 0; k < K; ++k) {
    double worst = 0.0;
    for (std::size_t p = 0; p < rs.size(); ++p) {
      double mag = 0.0;
      for (int i = 0; i < 2; ++i) mag += std::pow(samples_of(Gr[static_cast<std::size_t>(k)][i])[p], 2);
      worst = std::max(worst, std::sqrt(mag) / std::max(rs[p], 1e-300));
    }
    CHECK(worst <= noise.family->amplitude(k) * (1 + 1e-10));
  }

  // Symmetric (ρ, q) gives symmetric G_k.
  const auto rs_sym = symmetry_project(rho);
  for (const auto& Gk : noise_eval(noise, rs_sym, q0)) CHECK(symmetry_defect(Gk) < 1e-12);

  std::vector<double> neg(g.size(), 1.0);
  neg[0] = -1.0;
  CHECK_THROWS_AS(noise_eval(noise, SpectralField::from_samples(g, neg), q0), NegativeDensity);
}

TEST_CASE("noise pointwise bounds on random probes") {
  const auto g = grid2(32, 7);
  const auto noise = NoiseModel::trig_parity(g, 8, 1.0);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ux(0.0, g.length), ur(0.0, 50.0), uq(-5.0, 5.0);
  const double h = 1e-6;
  for (int probe = 0; probe < 1000; ++probe) {
    const std::array<double, 3> x{ux(rng), ux(rng), 0.0};
    const double r = ur(rng);
    const std::array<double, 3> q{uq(rng), uq(rng), 0.0};
    for (int k = 0; k < noise.size(); ++k) {
      const double alpha = noise.family->amplitude(k);
      const auto v = noise.family->evaluate(k, x, r, q);
      CHECK(std::hypot(v[0], v[1]) <= alpha * (1 + 1e-10));
      // Finite-difference gradient in (ρ, q).
      const auto vp = noise.family->evaluate(k, x, r + h, q);
      const auto vm = noise.family->evaluate(k, x, std::max(r - h, 0.0), q);
      const double span = r + h - std::max(r - h, 0.0);
      double grad2 = 0.0;
      for (int i = 0; i < 2; ++i) grad2 += std::pow((vp[i] - vm[i]) / span, 2);
      for (int c = 0; c < 2; ++c) {
        auto qp = q, qm = q;
        qp[c] += h;
        qm[c] -= h;
        const auto a = noise.family->evaluate(k, x, r, qp), b = noise.family->evaluate(k, x, r, qm);
        for (int i = 0; i < 2; ++i) grad2 += std::pow((a[i] - b[i]) / (2 * h), 2);
      }
      CHECK(std::sqrt(grad2) <= alpha * (1 + 1e-6));
    }
  }
}

TEST_CASE("noise parity under reflections") {
  const auto g = grid2(32, 7);
  const auto noise = NoiseModel::trig_parity(g, 8, 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, g.length), ur(0.0, 3.0);
  for (int probe = 0; probe < 100; ++probe) {
    const std::array<double, 3> x{ux(rng), ux(rng), 0.0};
    const double r = ur(rng);
    for (int k = 0; k < noise.size(); ++k)
      for (int axis = 0; axis < 2; ++axis) {
        std::array<double, 3> xr = x;
        xr[axis] = g.length - x[axis];
        const auto a = noise.family->evaluate(k, x, r, {});
        const auto b = noise.family->evaluate(k, xr, r, {});
        for (int i = 0; i < 2; ++i) {
          const double sign = i == axis ? -1.0 : 1.0;
          CHECK(b[i] == doctest::Approx(sign * a[i]).epsilon(1e-12).scale(1.0));
        }
      }
  }
}

}
