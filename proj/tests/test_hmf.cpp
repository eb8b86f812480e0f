#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "morreylab/hmf.hpp"

using namespace morreylab;

namespace {

double max_abs(const MapField& w) {
  double m = 0.0;
  for (const auto& c : w.comp)
    for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(Projection, IsIdempotent) {
  TorusGeometry g(2, 4.0, 16);
  const auto w = maps::random_small_map(g, 3, 0.02, 2, 5);
  const auto once = project_to_sphere(w);
  const auto twice = project_to_sphere(once);
  EXPECT_LT(max_abs(twice - once), 1e-15);
  EXPECT_LT(once.sphere_deviation(), 1e-14);
}

TEST(Projection, RejectsPointsNearOrigin) {
  TorusGeometry g(2, 4.0, 8);
  MapField w(g, 2);
  for (auto& v : w.comp[0]) v = 0.4;
  try {
    project_to_sphere(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutsideTubularNeighborhood);
  }
}

TEST(HarmonicMap, WindingMapIsStationary) {
  TorusGeometry g(2, 4.0, 32);
  const auto w = maps::winding_map(g, 1);
  EXPECT_LT(max_abs(hmf_rhs(w)), 1e-12);
  ScalarField e = energy_density(w);
  for (auto& v : e.values) v *= v;
  const double E = e.integral();
  EXPECT_NEAR(E, winding_energy(g, 1), 1e-10 * E);
  EXPECT_NEAR(winding_energy(g, 1), 4 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(HarmonicMap, ConstantMapHasZeroEnergy) {
  TorusGeometry g(3, 4.0, 8);
  const auto w = maps::constant_map(g, 3);
  EXPECT_EQ(energy_density(w).integral(), 0.0);
  EXPECT_EQ(max_abs(hmf_rhs(w)), 0.0);
}

TEST(HarmonicMap, RotationEquivariance) {
  // The flow commutes with rotations of the target sphere.
  TorusGeometry g(2, 4.0, 16);
  const auto w0 = maps::bump_map(g, 3, 0.5, 1.0);
  HmfOptions o;
  o.dt = DtPolicy::fixed(1e-3);
  const auto a = maps::rotate(evolve_hmf(w0, 0.05, o).final_map(), 0, 2, 0.7);
  const auto b = evolve_hmf(maps::rotate(w0, 0, 2, 0.7), 0.05, o).final_map();
  EXPECT_LT(max_abs(a - b), 1e-12);
}

TEST(HarmonicMap, FlowStaysOnSphereAndEnergyDecreases) {
  TorusGeometry g(2, 4.0, 16);
  const auto traj = evolve_hmf(maps::bump_map(g, 3, 0.5, 1.0), 0.5);
  EXPECT_LT(traj.max_sphere_deviation, 1e-12);
  for (std::size_t i = 1; i < traj.rows.size(); ++i) EXPECT_LE(traj.rows[i].energy, traj.rows[i - 1].energy * (1 + 1e-12));
}

TEST(HarmonicMap, RejectsOffSphereData) {
  TorusGeometry g(2, 4.0, 8);
  MapField w(g, 3);
  for (auto& v : w.comp[2]) v = 1.1;
  EXPECT_THROW(evolve_hmf(w, 0.1), Error);
}

TEST(Mollifier, RadiusBoundsAndConstantMap) {
  TorusGeometry g(2, 4.0, 32);
  const auto w = maps::constant_map(g, 3);
  EXPECT_THROW(mollify_map(w, 0.5), Error);
  EXPECT_THROW(mollify_map(w, 0.1), Error);  // below 2h = 0.25
  EXPECT_LT(max_abs(mollify_map(w, 0.25) - w), 1e-14);
}

TEST(Wang, SmallDataContracts) {
  TorusGeometry g(2, 4.0, 16);
  const auto rep = wang_iterate(maps::random_small_map(g, 3, 0.05, 1, 3), 0.2, 4, 50);
  ASSERT_EQ(rep.iterates.size(), 4u);
  for (std::size_t j = 1; j < rep.iterates.size(); ++j) EXPECT_LT(rep.iterates[j].ratio, 0.5);
}

TEST(Wang, HorizonBeyondOneRejected) {
  TorusGeometry g(2, 4.0, 8);
  EXPECT_THROW(wang_iterate(maps::constant_map(g, 3), 1.5, 2), Error);
}

TEST(XtNorm, ConstantMapHasUnitSup) {
  TorusGeometry g(2, 4.0, 8);
  const auto w = maps::constant_map(g, 3);
  const auto x = xt_norm({{0.0, w}, {0.5, w}, {1.0, w}}, 1.0);
  EXPECT_DOUBLE_EQ(x.sup_sup, 1.0);
  EXPECT_EQ(x.sup_sqrt_t_grad, 0.0);
  EXPECT_EQ(x.parabolic_morrey, 0.0);
}

TEST(LinearizedRate, MatchesFirstModeEigenvalue) {
  TorusGeometry g(3, 8.0, 8);
  EXPECT_NEAR(linearized_energy_rate(g), 2 * std::pow(2 * std::numbers::pi / 8.0, 2), 1e-14);
}
