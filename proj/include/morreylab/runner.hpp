#pragma once

// Scenario execution: one report per scenario, artifacts on disk, and a
// suite driver that runs scenario files concurrently.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "morreylab/checks.hpp"
#include "morreylab/scenario.hpp"
#include "morreylab/version.hpp"

namespace morreylab {

struct RunOptions {
  double tol_factor = 1.0;
  std::optional<std::uint64_t> seed;
};

struct Report {
  std::string scenario;
  std::string source;  ///< file the scenario came from, if any
  std::vector<CheckResult> results;
  std::string error;  ///< load or validation failure
  nlohmann::json fingerprint = nlohmann::json::object();
  double wall_seconds = 0.0;

  bool pass() const {
    if (!error.empty()) return false;
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
  }
};

inline nlohmann::json to_json(const Report& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : rep.results) checks.push_back(to_json(r));
  nlohmann::json j = {{"scenario", rep.scenario},
                      {"source", rep.source},
                      {"pass", rep.pass()},
                      {"checks", checks},
                      {"environment", rep.fingerprint},
                      {"wall_seconds", rep.wall_seconds}};
  if (!rep.error.empty()) j["error"] = rep.error;
  return j;
}

inline nlohmann::json fingerprint(const Scenario& sc, const RunOptions& opts) {
  const bool fixed = sc.run.dt.mode == DtPolicy::Mode::Fixed;
  return {{"version", kVersion},
          {"grid", {{"n", sc.geometry.n}, {"L", sc.geometry.L}, {"N", sc.geometry.N}}},
          {"dt", fixed ? nlohmann::json{{"policy", "fixed"}, {"dt", sc.run.dt.dt}}
                       : nlohmann::json{{"policy", "adaptive"}, {"safety", sc.run.dt.safety}}},
          {"seed", sc.seed},
          {"tol_factor", opts.tol_factor}};
}

inline Report run_scenario(Scenario sc, const RunOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (opts.seed) sc.seed = *opts.seed;
  Report rep;
  rep.scenario = sc.name;
  rep.fingerprint = fingerprint(sc, opts);
  CheckContext ctx(sc, opts.tol_factor);
  for (const auto& cs : sc.checks) rep.results.push_back(run_check(ctx, cs));
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Loads and runs a scenario file; load errors are reported, not thrown.
inline Report run_scenario_file(const std::filesystem::path& path, const RunOptions& opts = {}) {
  Report rep;
  try {
    rep = run_scenario(load_scenario(path.string()), opts);
  } catch (const Error& e) {
    rep.scenario = path.stem().string();
    rep.error = e.what();
  }
  rep.source = path.string();
  return rep;
}

inline std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

/// Writes report.json and every check artifact into `dir`.
inline void write_outputs(const Report& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << to_json(rep).dump(2) << "\n";
  for (const auto& r : rep.results) {
    for (const auto& a : r.artifacts) std::ofstream(dir / (r.name + "_" + a.filename)) << a.content;
  }
}

/// Scenario files (*.ini) of a directory in name order.
inline std::vector<std::filesystem::path> scenario_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::InvalidArgument, "not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ini") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Runs every scenario file with at most `jobs` in flight. Reports come back
/// in file order; `on_done` is called (serialized) as each one finishes.
template <class Callback>
std::vector<Report> run_suite(const std::vector<std::filesystem::path>& files, const RunOptions& opts, int jobs,
                              Callback on_done) {
  std::vector<Report> reports(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      reports[i] = run_scenario_file(files[i], opts);
      std::lock_guard<std::mutex> lock(done_mutex);
      on_done(reports[i]);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return reports;
}

inline std::vector<Report> run_suite(const std::vector<std::filesystem::path>& files, const RunOptions& opts, int jobs) {
  return run_suite(files, opts, jobs, [](const Report&) {});
}

}  // namespace morreylab
