#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "morreylab/runner.hpp"

using namespace morreylab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("morreylab-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Runner, EmptySuiteIsAnEmptyPass) {
  const auto dir = scratch_dir("empty");
  const auto reports = run_suite(scenario_files(dir), {}, 4);
  EXPECT_TRUE(reports.empty());
}

TEST(Runner, MissingDirectoryRejected) {
  EXPECT_THROW(scenario_files("/nonexistent/morreylab"), Error);
}

TEST(Runner, UnreadableScenarioBecomesReportError) {
  const auto dir = scratch_dir("broken");
  std::ofstream(dir / "bad.ini") << "name = x\n[nowhere]\n";
  const auto rep = run_scenario_file(dir / "bad.ini");
  EXPECT_FALSE(rep.pass());
  EXPECT_NE(rep.error.find("ParseError"), std::string::npos);
  EXPECT_EQ(rep.scenario, "bad");
}

TEST(Runner, RepeatedRunsWriteIdenticalArtifacts) {
  const fs::path src = fs::path(MORREYLAB_SCENARIO_DIR) / "06a_constant_oracle.ini";
  const auto a = run_scenario_file(src);
  const auto b = run_scenario_file(src);
  ASSERT_TRUE(a.pass());
  const auto da = scratch_dir("det-a");
  const auto db = scratch_dir("det-b");
  write_outputs(a, da);
  write_outputs(b, db);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(da)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(db / e.path().filename())) << e.path();
    ++compared;
  }
  EXPECT_GT(compared, 0u);
  EXPECT_TRUE(fs::exists(da / "report.json"));
}

TEST(Runner, StrictToleranceCanOnlyTighten) {
  const fs::path src = fs::path(MORREYLAB_SCENARIO_DIR) / "06a_constant_oracle.ini";
  RunOptions strict;
  strict.tol_factor = 1e-6;
  const auto rep = run_scenario_file(src, strict);
  ASSERT_EQ(rep.results.size(), 1u);
  EXPECT_DOUBLE_EQ(rep.results[0].tolerance, 1e-12);
  EXPECT_FALSE(rep.pass());
}

TEST(Runner, SeedOverrideIsRecorded) {
  const fs::path src = fs::path(MORREYLAB_SCENARIO_DIR) / "12_oracle_equivalence.ini";
  RunOptions o;
  o.seed = 99;
  const auto rep = run_scenario_file(src, o);
  EXPECT_EQ(rep.fingerprint["seed"], 99);
  EXPECT_TRUE(rep.pass());
}

TEST(Runner, TimestampFormat) {
  const auto ts = timestamp();
  ASSERT_EQ(ts.size(), 16u);
  EXPECT_EQ(ts[8], 'T');
  EXPECT_EQ(ts.back(), 'Z');
}
