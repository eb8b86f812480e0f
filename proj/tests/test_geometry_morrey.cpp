#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "morreylab/morrey.hpp"
#include "morreylab/oracle.hpp"
#include "morreylab/profiles.hpp"

using namespace morreylab;

namespace {

ScalarField random_field(const TorusGeometry& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField f(g);
  for (auto& v : f.values) v = dist(rng);
  return f;
}

}  // namespace

TEST(Geometry, RejectsBadGrids) {
  EXPECT_THROW(TorusGeometry(4, 4.0, 8), Error);
  EXPECT_THROW(TorusGeometry(2, 3.0, 8), Error);
  EXPECT_THROW(TorusGeometry(2, 4.0, 9), Error);
  EXPECT_THROW(TorusGeometry(2, 4.0, 6), Error);
  try {
    TorusGeometry(2, 4.0, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidGeometry);
  }
}

TEST(Geometry, FlattenRoundTrip) {
  TorusGeometry g(3, 4.0, 8);
  for (std::size_t i = 0; i < g.size(); i += 7) EXPECT_EQ(g.flatten(g.unflatten(i)), i);
}

TEST(Geometry, MinimumImageDistance) {
  const double x[2] = {0.1, 0.2};
  const double y[2] = {3.9, 0.2};
  EXPECT_NEAR(periodic_distance(x, y, 2, 4.0), 0.2, 1e-14);
}

TEST(Geometry, DyadicRadiiStopAtTwoSpacings) {
  TorusGeometry g(2, 4.0, 64);  // h = 1/16
  const auto radii = dyadic_radii(g);
  ASSERT_FALSE(radii.empty());
  EXPECT_DOUBLE_EQ(radii.front(), 1.0);
  EXPECT_GE(radii.back(), 2.0 * g.spacing() - 1e-15);
  for (std::size_t i = 1; i < radii.size(); ++i) EXPECT_DOUBLE_EQ(radii[i], radii[i - 1] / 2);
}

TEST(BallCover, RadiusBounds) {
  TorusGeometry g(2, 4.0, 16);
  EXPECT_THROW(BallCover(g, 0.3), Error);
  EXPECT_THROW(BallCover(g, 1.5), Error);
  EXPECT_NO_THROW(BallCover(g, 0.5));
}

TEST(BallCover, MatchesDirectMembership) {
  for (int n : {2, 3}) {
    TorusGeometry g(n, 4.0, n == 2 ? 16 : 8);
    for (double r : dyadic_radii(g)) {
      BallCover cover(g, r);
      EXPECT_EQ(cover.centers(), oracle::cover_centers(g, r));
      for (std::size_t c : {cover.centers().front(), cover.centers().back()}) {
        auto fast = cover.member_indices(c);
        auto slow = oracle::ball_members(g, c, r);
        std::sort(fast.begin(), fast.end());
        EXPECT_EQ(fast, slow) << "n=" << n << " r=" << r;
      }
    }
  }
}

TEST(Morrey, MatchesBruteForceOn8x8) {
  TorusGeometry g(2, 4.0, 8);
  const auto radii = dyadic_radii(g);
  const auto f = random_field(g, 1);
  for (auto centers : {CenterSet::Cover, CenterSet::AllGridPoints}) {
    MorreyEvaluator ev(g, radii, centers);
    for (MorreyParams mp : {MorreyParams{1.0, 0.0}, MorreyParams{2.0, 1.0}, MorreyParams{3.0, 2.0}}) {
      const double fast = ev.norm(f, mp);
      const double slow = oracle::morrey_norm(f, mp, radii, centers);
      EXPECT_NEAR(fast, slow, 1e-12 * slow);
    }
  }
}

TEST(Morrey, MatchesBruteForceOn16x16) {
  TorusGeometry g(2, 4.0, 16);
  const std::vector<double> radii{1.0, 0.75, 0.5};
  const auto f = random_field(g, 2);
  MorreyEvaluator ev(g, radii, CenterSet::AllGridPoints);
  const MorreyParams mp{1.5, 0.5};
  EXPECT_NEAR(ev.norm(f, mp), oracle::morrey_norm(f, mp, radii, CenterSet::AllGridPoints), 1e-11);
}

TEST(Morrey, ConstantFieldScalesWithVolume) {
  // For f = c and lambda = n the ball average gives |c| times a volume ratio
  // that is the same at every radius up to lattice effects.
  TorusGeometry g(2, 4.0, 64);
  MorreyEvaluator ev(g);
  const double a = ev.norm(profiles::constant(g, 1.0), {2.0, 2.0});
  const double b = ev.norm(profiles::constant(g, 3.0), {2.0, 2.0});
  EXPECT_NEAR(b / a, 3.0, 1e-12);
}

TEST(Morrey, InfiniteExponentIsSupNorm) {
  TorusGeometry g(2, 4.0, 8);
  auto f = random_field(g, 3);
  EXPECT_DOUBLE_EQ(morrey_norm(f, {INFINITY, 0.0}, dyadic_radii(g)).value, f.max_abs());
}

TEST(Morrey, EmptyRadiiRejected) {
  TorusGeometry g(2, 4.0, 8);
  try {
    MorreyEvaluator ev(g, std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyRadiiSet);
  }
}
