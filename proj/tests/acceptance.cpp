// Runs the bundled scenario library and prints one verdict line per
// acceptance criterion. A criterion passes when every scenario whose file
// name starts with its two-digit number passes.

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "morreylab/runner.hpp"

using namespace morreylab;

namespace {

struct Criterion {
  int id;
  const char* title;
};

constexpr Criterion kCriteria[] = {
    {1, "spectral exactness"},
    {2, "Gaussian kernel bounds"},
    {3, "Morrey smoothing exponent"},
    {4, "gradient estimates"},
    {5, "improved linear decay"},
    {6, "semilinear oracle and order"},
    {7, "blow-up detection"},
    {8, "critical envelope"},
    {9, "subsolution verification"},
    {10, "harmonic map heat flow suite"},
    {11, "Bochner subsolution"},
    {12, "oracle equivalence"},
};

int criterion_of(const std::string& filename) {
  try {
    return std::stoi(filename.substr(0, 2));
  } catch (const std::exception&) {
    return -1;
  }
}

std::string summarize(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s=%.4g", r.name.c_str(), r.measured);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : MORREYLAB_SCENARIO_DIR;
  const auto files = scenario_files(dir);
  const int jobs = static_cast<int>(std::max(2u, std::thread::hardware_concurrency()));
  const auto reports = run_suite(files, {}, jobs, [](const Report& rep) {
    std::fprintf(stderr, "  %-28s %s (%.1fs)\n", rep.scenario.c_str(), rep.pass() ? "pass" : "FAIL", rep.wall_seconds);
  });

  std::map<int, std::vector<const Report*>> grouped;
  for (std::size_t i = 0; i < files.size(); ++i) grouped[criterion_of(files[i].filename().string())].push_back(&reports[i]);

  int failed = 0;
  for (const auto& c : kCriteria) {
    const auto& reps = grouped[c.id];
    bool ok = !reps.empty();
    std::string detail;
    for (const Report* rep : reps) {
      ok = ok && rep->pass();
      if (!rep->error.empty()) detail += " " + rep->scenario + ": " + rep->error;
      for (const auto& r : rep->results) {
        detail += " " + summarize(r);
        if (!r.pass) detail += "(FAIL" + (r.error.empty() ? std::string() : ": " + r.error) + ")";
      }
    }
    if (reps.empty()) detail = " no scenario";
    std::printf("[%s] criterion %2d: %s |%s\n", ok ? "PASS" : "FAIL", c.id, c.title, detail.c_str());
    failed += ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(kCriteria)) - failed, std::size(kCriteria));
  return failed == 0 ? 0 : 1;
}
