#include <gtest/gtest.h>

#include <string>

#include "morreylab/checks.hpp"
#include "morreylab/runner.hpp"
#include "morreylab/scenario.hpp"

using namespace morreylab;

namespace {

const std::string kMinimal = R"(name = demo
seed = 3
[geometry]
n = 2
L = 4
N = 8
[problem]
p = 3
q = 1.5
r = 3
[initial]
profile = constant
amplitude = 0.25
[run]
T = 0.1
dt_policy = fixed
dt = 0.01
[checks]
constant_oracle = tol=1e-6
)";

Error parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected a parse failure";
  return Error(ErrorKind::InvalidArgument, "none");
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST(ScenarioParser, ReadsEverySection) {
  const auto sc = parse_scenario(kMinimal);
  EXPECT_EQ(sc.name, "demo");
  EXPECT_EQ(sc.seed, 3u);
  EXPECT_EQ(sc.geometry.N, 8);
  ASSERT_TRUE(sc.problem.has_value());
  EXPECT_DOUBLE_EQ(sc.problem->p, 3.0);
  EXPECT_EQ(sc.run.dt.mode, DtPolicy::Mode::Fixed);
  ASSERT_EQ(sc.checks.size(), 1u);
  EXPECT_EQ(sc.checks[0].name, "constant_oracle");
  EXPECT_DOUBLE_EQ(sc.checks[0].tol, 1e-6);
}

TEST(ScenarioParser, CommentsAndBlankLinesIgnored) {
  EXPECT_NO_THROW(parse_scenario("# header\n\n" + replace(kMinimal, "seed = 3", "seed = 3   # trailing")));
}

TEST(ScenarioParser, UnknownKeyReportsPosition) {
  const auto e = parse_error(replace(kMinimal, "N = 8", "M = 8"));
  EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  EXPECT_NE(std::string(e.what()).find("line 6, column 1"), std::string::npos) << e.what();
  EXPECT_NE(std::string(e.what()).find("unknown key 'M'"), std::string::npos);
}

TEST(ScenarioParser, StrictErrors) {
  for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>>{
           {"[run]", "[runs]"},
           {"[run]", "[run"},
           {"N = 8", "N = eight"},
           {"N = 8", "N = 8.5"},
           {"L = 4", "L = 4\nL = 5"},
           {"profile = constant", "profile = triangle"},
           {"dt_policy = fixed", "dt_policy = sometimes"},
           {"constant_oracle = tol=1e-6", "constant_oracle = 1e-6"},
           {"constant_oracle = tol=1e-6", "constant_oracle = tol=1e-6 extra=2"},
           {"constant_oracle = tol=1e-6", "constant_oracle = trials=2"},
           {"constant_oracle = tol=1e-6", "nonexistent_check = tol=1"},
           {"seed = 3", "seed = -1"},
       }) {
    EXPECT_EQ(parse_error(replace(kMinimal, from, to)).kind(), ErrorKind::ParseError) << to;
  }
  EXPECT_EQ(parse_error(replace(kMinimal, "name = demo", "")).kind(), ErrorKind::ParseError);
}

TEST(ScenarioParser, ValidationErrors) {
  EXPECT_EQ(parse_error(replace(kMinimal, "N = 8", "N = 9")).kind(), ErrorKind::ValidationError);
  EXPECT_EQ(parse_error(replace(kMinimal, "n = 2", "n = 4")).kind(), ErrorKind::ValidationError);
  EXPECT_EQ(parse_error(replace(kMinimal, "L = 4", "L = 2")).kind(), ErrorKind::ValidationError);

  auto bad_p = replace(replace(kMinimal, "n = 2", "n = 3"), "p = 3", "p = 1.1");
  const auto e = parse_error(bad_p);
  EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
  EXPECT_NE(std::string(e.what()).find("p > 1 + 2/n"), std::string::npos) << e.what();
}

TEST(ScenarioParser, CheckParameterLists) {
  auto text = replace(kMinimal, "constant_oracle = tol=1e-6",
                      "convergence_order = tol=0.1 dts=0.02,0.01,0.005 reference_factor=8");
  const auto sc = parse_scenario(text);
  EXPECT_EQ(sc.checks[0].numbers("dts", {}), (std::vector<double>{0.02, 0.01, 0.005}));
  EXPECT_DOUBLE_EQ(sc.checks[0].number("reference_factor", 0), 8.0);
  EXPECT_DOUBLE_EQ(sc.checks[0].number("absent", 1.5), 1.5);
}

TEST(ScenarioParser, EveryShippedScenarioParses) {
  const auto files = scenario_files(MORREYLAB_SCENARIO_DIR);
  EXPECT_GE(files.size(), 12u);
  for (const auto& f : files) EXPECT_NO_THROW(load_scenario(f.string())) << f;
}

TEST(Registry, CoversParameterTable) {
  for (const auto& [name, params] : check_parameter_table()) EXPECT_TRUE(checks::registry().count(name)) << name;
  EXPECT_EQ(checks::registry().size(), check_parameter_table().size());
}

TEST(Checks, ToleranceScalingDirection) {
  CheckResult upper;
  upper.comparison = Comparison::AtMost;
  upper.measured = 0.8;
  upper.tolerance = 1.0;
  decide(upper, 0.5);
  EXPECT_FALSE(upper.pass);

  CheckResult lower;
  lower.comparison = Comparison::AtLeast;
  lower.measured = 1.5;
  lower.tolerance = 1.0;
  decide(lower, 0.5);
  EXPECT_FALSE(lower.pass);
  lower.tolerance = 1.0;
  decide(lower, 1.0);
  EXPECT_TRUE(lower.pass);
}
