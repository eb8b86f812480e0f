#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "morreylab/heat_kernel.hpp"
#include "morreylab/profiles.hpp"

using namespace morreylab;

TEST(Spectral, RoundTripIsIdentity) {
  TorusGeometry g(3, 4.0, 8);
  Spectral sp(g);
  ScalarField f = profiles::fourier_mode(g, {1, 2, 0}, 0.7);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += 0.01 * static_cast<double>(i % 5);
  const auto back = sp.inverse(sp.forward(f.view()));
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(back[i], f[i], 1e-13);
}

TEST(HeatSemigroup, FourierModeDecaysExactly) {
  // cos(2 pi m.x / L) is an eigenfunction with eigenvalue |2 pi m / L|^2.
  TorusGeometry g(2, 4.0, 16);
  HeatSemigroup heat(g);
  const auto f = profiles::fourier_mode(g, {1, 2, 0}, 1.0);
  const double k2 = std::pow(2 * std::numbers::pi / 4.0, 2) * 5.0;
  for (double t : {0.01, 0.1, 0.7}) {
    const auto u = heat.propagate(f, t);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(u[i], std::exp(-k2 * t) * f[i], 1e-13);
  }
}

TEST(HeatSemigroup, SemigroupAndMass) {
  TorusGeometry g(2, 4.0, 32);
  HeatSemigroup heat(g);
  const auto f = profiles::bubble(g, 3.0, 2.0, 0.5);
  const auto a = heat.propagate(heat.propagate(f, 0.05), 0.07);
  const auto b = heat.propagate(f, 0.12);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_NEAR(b.integral(), f.integral(), 1e-11 * std::abs(f.integral()));
}

TEST(HeatSemigroup, NegativeTimeRejected) {
  TorusGeometry g(2, 4.0, 8);
  HeatSemigroup heat(g);
  try {
    heat.propagate(ScalarField(g, 1.0), -0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeTime);
  }
}

TEST(HeatSemigroup, TranslationEquivariance) {
  TorusGeometry g(2, 4.0, 16);
  HeatSemigroup heat(g);
  auto f = profiles::bubble(g, 3.0, 1.0, 0.4);
  ScalarField shifted(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    idx[0] = (idx[0] + 3) % 16;
    idx[1] = (idx[1] + 5) % 16;
    shifted[g.flatten(idx)] = f[i];
  }
  const auto u = heat.propagate(f, 0.2);
  const auto v = heat.propagate(shifted, 0.2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    idx[0] = (idx[0] + 3) % 16;
    idx[1] = (idx[1] + 5) % 16;
    EXPECT_NEAR(v[g.flatten(idx)], u[i], 1e-13);
  }
}

TEST(HeatKernel, ImageSumMatchesFreeGaussianForSmallTime) {
  // At t = 0.01 on L = 4 the nearest image is 16 diffusion lengths away.
  TorusGeometry g(2, 4.0, 16);
  const std::size_t y = g.flatten({2, 1, 0});
  const double h = g.spacing();
  const double d2 = std::pow(2 * h, 2) + std::pow(h, 2);
  const double t = 0.01;
  const double free = std::exp(-d2 / (4 * t)) / (4 * std::numbers::pi * t);
  EXPECT_NEAR(kernel_eval(g, 0, y, t) / free, 1.0, 1e-12);
}

TEST(HeatKernel, IntegratesToOne) {
  TorusGeometry g(2, 4.0, 64);
  double s = 0.0;
  for (std::size_t y = 0; y < g.size(); ++y) s += kernel_eval(g, 0, y, 0.3);
  EXPECT_NEAR(s * g.cell_volume(), 1.0, 1e-10);
}

TEST(HeatKernel, GaussianBoundConstants) {
  // Lower bound constant approaches (4 pi)^{n/2} at the diagonal.
  TorusGeometry g(2, 4.0, 16);
  const auto b = fit_gaussian_bounds(g, log_spaced(1e-3, 1.0, 8), orthant_sample_pairs(g));
  EXPECT_NEAR(b.c_lower, 4 * std::numbers::pi, 1e-6);
  EXPECT_GT(b.c_upper, 1.0);
  EXPECT_LT(b.c_upper, 5.0);
}

TEST(HeatKernel, SmoothingExponentOfSpike) {
  // L^1 data to L^inf: rate n/2 at small t.
  TorusGeometry g(2, 4.0, 64);
  HeatSemigroup heat(g);
  const auto fit = smoothing_exponent(profiles::spike(g), 1.0, INFINITY, 2.0, log_spaced(0.02, 0.2, 8),
                                      MorreyEvaluator(g), heat);
  EXPECT_DOUBLE_EQ(fit.target_exponent, -1.0);
  EXPECT_NEAR(fit.fitted_exponent, -1.0, 0.05);
}
