#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "morreylab/profiles.hpp"
#include "morreylab/semilinear.hpp"

using namespace morreylab;

namespace {

ProblemSpec cubic_2d() {
  ProblemSpec s;
  s.n = 2;
  s.p = 3.0;
  s.A = 1.0;
  s.B = 0.0;
  s.q = 1.5;
  s.r = 3.0;
  return s;
}

EvolveOptions fixed(double dt, int snapshot_every = 0) {
  EvolveOptions o;
  o.dt = DtPolicy::fixed(dt);
  o.snapshot_every = snapshot_every;
  return o;
}

}  // namespace

TEST(ProblemSpec, ExponentRelations) {
  const auto s = cubic_2d();
  EXPECT_DOUBLE_EQ(s.critical_exponent(), 2.0);
  EXPECT_DOUBLE_EQ(s.lambda(), 1.5);
  EXPECT_DOUBLE_EQ(s.decay_exponent(), 0.5);
  EXPECT_NO_THROW(s.validate());
}

TEST(ProblemSpec, ValidationMessages) {
  auto s = cubic_2d();
  s.n = 3;
  s.p = 1.1;
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
    EXPECT_NE(std::string(e.what()).find("p > 1 + 2/n"), std::string::npos);
  }
  s = cubic_2d();
  s.r = 1.6;  // q < r holds but r/p < 1
  EXPECT_THROW(s.validate(), Error);
}

TEST(PhiFunctions, MatchReferenceOnBothSidesOfSwitch) {
  for (double z : {-0.5, -1.001e-3, -0.999e-3, -1e-6, 1e-6, 0.999e-3, 1.001e-3, 0.5}) {
    const long double zl = z;
    const long double ref1 = std::expm1(zl) / zl;
    const long double ref2 = (std::expm1(zl) - zl) / (zl * zl);
    double phi1, phi2;
    detail::phi_functions(z, phi1, phi2);
    EXPECT_NEAR(phi1, static_cast<double>(ref1), 1e-13) << z;
    EXPECT_NEAR(phi2, static_cast<double>(ref2), 1e-9) << z;
  }
  double a1, a2;
  detail::phi_functions(0.0, a1, a2);
  EXPECT_DOUBLE_EQ(a1, 1.0);
  EXPECT_DOUBLE_EQ(a2, 0.5);
}

TEST(Evolve, ConstantDataFollowsBernoulliOde) {
  auto s = cubic_2d();
  s.B = 0.5;
  TorusGeometry g(2, 4.0, 8);
  const auto traj = evolve(profiles::constant(g, 0.5), s, 0.5, fixed(1e-3));
  const double exact = constant_solution(s, 0.5, 0.5);
  EXPECT_NEAR(traj.snapshots.back().u[0] / exact, 1.0, 1e-6);
  EXPECT_FALSE(traj.blew_up);
}

TEST(Evolve, ZeroDataStaysZero) {
  TorusGeometry g(2, 4.0, 16);
  const auto traj = evolve(ScalarField(g), cubic_2d(), 0.1, fixed(1e-3));
  EXPECT_EQ(traj.snapshots.back().u.max_abs(), 0.0);
  EXPECT_EQ(morrey_stays_small(traj).max_ratio, 0.0);
}

TEST(Evolve, SecondOrderInTime) {
  TorusGeometry g(2, 4.0, 16);
  ScalarField u0 = profiles::fourier_mode(g, {1, 0, 0}, 0.2);
  for (auto& v : u0.values) v += 0.3;
  const auto study = convergence_order(u0, cubic_2d(), 0.2, {0.02, 0.01, 0.005});
  EXPECT_NEAR(study.order, 2.0, 0.15);
}

TEST(Evolve, KaplanBlowupTime) {
  // u0 = 2, p = 3, A = 1, B = 0: T* = c^{1-p}/(p-1) = 1/8.
  TorusGeometry g(2, 4.0, 8);
  EvolveOptions o;
  o.dt.safety = 0.01;
  o.blowup_threshold = 2e6;
  const auto traj = evolve(profiles::constant(g, 2.0), cubic_2d(), 1.0, o);
  ASSERT_TRUE(detect_blowup(traj).detected);
  const auto t = crossing_time(traj, 1e6);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, 0.125, 1e-3);
}

TEST(Evolve, DeterministicCsv) {
  TorusGeometry g(2, 4.0, 16);
  const auto u0 = profiles::bubble(g, 3.0, 0.5, 0.5);
  std::ostringstream a, b;
  write_csv(evolve(u0, cubic_2d(), 0.05), a);
  write_csv(evolve(u0, cubic_2d(), 0.05), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "t,sup_norm,morrey_q_lambda,morrey_r_lambda,sup_Ls_unit_balls,clipped_mass");
}

TEST(Subsolution, ViolationShrinksUnderRefinement) {
  const auto s = cubic_2d();
  auto violation = [&](int N, double dt) {
    TorusGeometry g(2, 4.0, N);
    const auto traj = evolve(profiles::bubble(g, 3.0, 0.5, 0.5), s, 0.1, fixed(dt, 1));
    return verify_subsolution(traj, 0.05, 0.1).max_violation;
  };
  const auto v = refinement_verdict(violation(16, 0.01), violation(32, 0.005), 1e-10);
  EXPECT_TRUE(v.pass) << v.coarse << " " << v.fine;
}

TEST(Subsolution, UnknownTimeRejected) {
  TorusGeometry g(2, 4.0, 8);
  const auto traj = evolve(profiles::constant(g, 0.1), cubic_2d(), 0.1, fixed(0.01));
  try {
    verify_subsolution(traj, 0.033, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TimesNotInTrajectory);
  }
}

TEST(IntegratingFactor, WindowBeyondOneRejected) {
  auto s = cubic_2d();
  s.B = 1.0;
  TorusGeometry g(2, 4.0, 8);
  const auto traj = evolve(profiles::constant(g, 0.1), s, 1.5, fixed(0.05, 1));
  try {
    integrating_factor_check(traj, 1.0, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WindowTooLate);
  }
}

TEST(RefinementVerdict, Rules) {
  EXPECT_NEAR(refinement_verdict(4e-6, 1e-6, 1e-12).order, 2.0, 1e-12);
  EXPECT_FALSE(refinement_verdict(1e-6, 1e-6, 1e-12).pass);
  EXPECT_TRUE(refinement_verdict(0.0, 0.0, 1e-12).pass);
}

TEST(Decay, BlowupInsideWindowRejected) {
  TorusGeometry g(2, 4.0, 8);
  EvolveOptions o;
  o.dt.safety = 0.05;
  const auto traj = evolve(profiles::constant(g, 2.0), cubic_2d(), 1.0, o);
  ASSERT_TRUE(traj.blew_up);
  try {
    fit_decay(traj, 0.01, 0.5, DecayTarget::Critical);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BlowupInWindow);
  }
}
