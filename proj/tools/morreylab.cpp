// Command-line runner for scenario files.
//
//   morreylab run <file>   [--out DIR] [--seed N] [--strict-tol F]
//   morreylab suite <dir>  [--out DIR] [--jobs K] [--seed N] [--strict-tol F]
//
// Output goes to DIR/<scenario>-<UTC timestamp>/; DIR defaults to
// $MORREYLAB_OUT, then ./morreylab-out. Exit status: 0 all checks pass,
// 1 some check failed, 2 bad invocation or unreadable scenario.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "morreylab/runner.hpp"

namespace fs = std::filesystem;
using namespace morreylab;

namespace {

fs::path default_out() {
  if (const char* env = std::getenv("MORREYLAB_OUT"); env && *env) return env;
  return "morreylab-out";
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_report(const Report& rep) {
  std::printf("%s %s (%.1fs)\n", rep.pass() ? "PASS" : "FAIL", rep.scenario.c_str(), rep.wall_seconds);
  if (!rep.error.empty()) std::printf("  error: %s\n", rep.error.c_str());
  for (const auto& r : rep.results) {
    std::printf("  %-4s %-24s measured %-12s tolerance %-10s", r.pass ? "ok" : "FAIL", r.name.c_str(),
                format_number(r.measured).c_str(), format_number(r.tolerance).c_str());
    if (std::isfinite(r.target)) std::printf(" target %s", format_number(r.target).c_str());
    if (!r.error.empty()) std::printf(" error: %s", r.error.c_str());
    std::printf("\n");
  }
}

// Two runs inside the same second would collide; suffix the later ones.
fs::path output_dir(const fs::path& root, const Report& rep) {
  const std::string base = rep.scenario + "-" + timestamp();
  fs::path dir = root / base;
  for (int i = 2; fs::exists(dir); ++i) dir = root / (base + "-" + std::to_string(i));
  return dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morrey-space heat flow laboratory: scenario runner"};
  app.require_subcommand(1);

  std::string out_dir;
  std::optional<std::uint64_t> seed;
  double strict_tol = 1.0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  std::string file;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("file", file, "scenario file")->required()->check(CLI::ExistingFile);

  std::string dir;
  auto* suite = app.add_subcommand("suite", "run every *.ini scenario in a directory");
  suite->add_option("dir", dir, "scenario directory")->required()->check(CLI::ExistingDirectory);
  suite->add_option("--jobs,-j", jobs, "scenarios run concurrently")->check(CLI::PositiveNumber);

  for (auto* sub : {run, suite}) {
    sub->add_option("--out,-o", out_dir, "output root (default $MORREYLAB_OUT or ./morreylab-out)");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--strict-tol", strict_tol, "multiply tolerances by this factor (< 1 is stricter)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const fs::path root = out_dir.empty() ? default_out() : fs::path(out_dir);
  RunOptions opts;
  opts.tol_factor = strict_tol;
  opts.seed = seed;

  try {
    if (*run) {
      const Report rep = run_scenario_file(file, opts);
      print_report(rep);
      if (!rep.error.empty()) return 2;
      const fs::path where = output_dir(root, rep);
      write_outputs(rep, where);
      std::printf("artifacts: %s\n", where.string().c_str());
      return rep.pass() ? 0 : 1;
    }

    const auto files = scenario_files(dir);
    std::size_t passed = 0;
    const auto reports = run_suite(files, opts, jobs, [&](const Report& rep) {
      print_report(rep);
      if (rep.error.empty()) write_outputs(rep, output_dir(root, rep));
      if (rep.pass()) ++passed;
      std::fflush(stdout);
    });
    std::printf("\n%zu/%zu scenarios passed\n", passed, reports.size());
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& rep : reports) summary.push_back({{"scenario", rep.scenario}, {"source", rep.source}, {"pass", rep.pass()}});
    fs::create_directories(root);
    std::ofstream(root / ("suite-" + timestamp() + ".json")) << summary.dump(2) << "\n";
    return passed == reports.size() ? 0 : 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
