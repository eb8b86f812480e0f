#pragma once

// Scenario files: a small sectioned key = value format.
//
//   # comment
//   name = smoothing_case_iii
//   seed = 7
//   [geometry]    n, L, N
//   [problem]     p, A, B, q, r, s, q_prime, lambda_prime
//   [initial]     profile, amplitude, width, exponent, offset, mode, winding, k, noise, modes
//   [run]         T, dt_policy, dt, safety, blowup_threshold, record_every, snapshot_every
//   [checks]      <check name> = tol=<x> [key=value ...]
//
// Every key is checked against the tables below; unknown sections, keys,
// checks and check parameters are parse errors.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "morreylab/error.hpp"
#include "morreylab/geometry.hpp"
#include "morreylab/semilinear.hpp"

namespace morreylab {

struct GeometryBlock {
  int n = 3;
  double L = 4.0;
  int N = 32;
};

struct InitialBlock {
  std::string profile = "constant";
  double amplitude = 1.0;
  double width = 0.25;
  double exponent = 0.0;  ///< power profile |x|^{-exponent}
  double offset = 0.0;    ///< added to fourier_mode
  MultiIndex mode{1, 0, 0};
  int winding = 1;
  int k = 3;
  double noise = 0.0;
  int modes = 1;  ///< highest Fourier mode of random_map
};

struct RunBlock {
  double T = 1.0;
  DtPolicy dt;
  double blowup_threshold = 0.0;
  int record_every = 1;
  int snapshot_every = 0;
};

struct CheckSpec {
  std::string name;
  double tol = 0.0;
  std::map<std::string, std::string> params;
  int line = 0;

  bool has(const std::string& key) const { return params.count(key) > 0; }
  double number(const std::string& key, double fallback) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::string text(const std::string& key, std::string fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  GeometryBlock geometry;
  std::optional<ProblemSpec> problem;
  InitialBlock initial;
  RunBlock run;
  std::vector<CheckSpec> checks;

  TorusGeometry make_geometry() const { return TorusGeometry(geometry.n, geometry.L, geometry.N); }
  const ProblemSpec& require_problem() const {
    if (!problem) throw Error(ErrorKind::ValidationError, "scenario '" + name + "' needs a [problem] section");
    return *problem;
  }
};

/// Check names and the parameters each one accepts besides tol.
inline const std::map<std::string, std::set<std::string>, std::less<>>& check_parameter_table() {
  static const std::map<std::string, std::set<std::string>, std::less<>> table = {
      {"mode_propagation", {"t"}},
      {"semigroup_property", {"t1", "t2"}},
      {"mass_conservation", {"t_min", "t_max", "samples"}},
      {"gaussian_bounds", {"N_fine", "t_min", "t_max", "samples"}},
      {"smoothing_exponent", {"s1", "s2", "lambda", "t_min", "t_max", "samples"}},
      {"gradient_exponent", {"q", "r", "t_min", "t_max", "samples"}},
      {"gradient_constant", {"q", "r", "t_min", "t_max", "samples"}},
      {"decay_rate", {"target", "t_min", "t_max"}},
      {"constant_oracle", {}},
      {"convergence_order", {"dts", "reference_factor"}},
      {"blowup_time", {"threshold_factor"}},
      {"no_blowup", {}},
      {"critical_envelope", {"grids"}},
      {"morrey_small", {}},
      {"subsolution_refinement", {"t_start", "t_end", "floor"}},
      {"remainder_ratios", {"t_start", "t_end"}},
      {"hmf_converges", {}},
      {"hmf_energy_rate", {}},
      {"winding_control", {}},
      {"wang_contraction", {"T", "iterate", "iterations", "time_steps"}},
      {"bochner_subsolution", {"t_start", "t_end", "floor"}},
      {"oracle_equivalence", {"trials"}},
  };
  return table;
}

namespace detail {

[[noreturn]] inline void parse_fail(int line, int column, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

inline double CheckSpec::number(const std::string& key, double fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  auto v = detail::to_double(it->second);
  if (!v) detail::parse_fail(line, 1, "check '" + name + "': parameter " + key + " is not a number");
  return *v;
}

inline std::vector<double> CheckSpec::numbers(const std::string& key, std::vector<double> fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<double> out;
  for (auto part : detail::split(it->second, ',')) {
    auto v = detail::to_double(part);
    if (!v) detail::parse_fail(line, 1, "check '" + name + "': parameter " + key + " must be a comma list of numbers");
    out.push_back(*v);
  }
  return out;
}

inline Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  std::string section;
  std::set<std::string> seen;
  std::map<std::string, double> problem_values;
  int line_no = 0;
  bool has_problem = false;

  for (auto raw : detail::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::size_t indent = line.find_first_not_of(" \t");
    line = detail::trim(line);
    if (line.empty()) continue;
    const int col0 = static_cast<int>(indent == std::string_view::npos ? 0 : indent) + 1;

    if (line.front() == '[') {
      if (line.back() != ']') detail::parse_fail(line_no, col0, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> sections = {"geometry", "problem", "initial", "run", "checks"};
      if (!sections.count(section)) detail::parse_fail(line_no, col0 + 1, "unknown section [" + section + "]");
      if (!seen.insert("[" + section + "]").second) detail::parse_fail(line_no, col0, "duplicate section [" + section + "]");
      if (section == "problem") has_problem = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::parse_fail(line_no, col0, "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const std::size_t vpos = line.find_first_not_of(" \t", eq + 1);
    const int value_col = col0 + static_cast<int>(vpos == std::string_view::npos ? eq + 1 : vpos);
    if (key.empty()) detail::parse_fail(line_no, col0, "empty key");

    auto num = [&]() {
      auto v = detail::to_double(value);
      if (!v) detail::parse_fail(line_no, value_col, "'" + key + "' expects a number, got '" + std::string(value) + "'");
      return *v;
    };
    auto integer = [&]() {
      auto v = detail::to_integer(value);
      if (!v) detail::parse_fail(line_no, value_col, "'" + key + "' expects an integer, got '" + std::string(value) + "'");
      return *v;
    };
    auto unknown = [&]() {
      detail::parse_fail(line_no, col0, "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
    };

    if (section != "checks" && !seen.insert(section + "." + key).second) {
      detail::parse_fail(line_no, col0, "duplicate key '" + key + "'");
    }

    if (section.empty()) {
      if (key == "name") {
        if (value.empty()) detail::parse_fail(line_no, value_col, "empty scenario name");
        sc.name = std::string(value);
      } else if (key == "seed") {
        const auto s = integer();
        if (s < 0) detail::parse_fail(line_no, value_col, "seed must be nonnegative");
        sc.seed = static_cast<std::uint64_t>(s);
      } else {
        unknown();
      }
    } else if (section == "geometry") {
      if (key == "n") sc.geometry.n = static_cast<int>(integer());
      else if (key == "L") sc.geometry.L = num();
      else if (key == "N") sc.geometry.N = static_cast<int>(integer());
      else unknown();
    } else if (section == "problem") {
      static const std::set<std::string> keys = {"p", "A", "B", "q", "r", "s", "q_prime", "lambda_prime"};
      if (!keys.count(key)) unknown();
      problem_values[key] = num();
    } else if (section == "initial") {
      auto& in = sc.initial;
      if (key == "profile") {
        static const std::set<std::string, std::less<>> profiles = {"constant", "spike", "power", "bubble",
                                                                    "fourier_mode", "winding_map", "bump_map",
                                                                    "random_map"};
        if (!profiles.count(value)) detail::parse_fail(line_no, value_col, "unknown profile '" + std::string(value) + "'");
        in.profile = std::string(value);
      } else if (key == "amplitude") in.amplitude = num();
      else if (key == "width") in.width = num();
      else if (key == "exponent") in.exponent = num();
      else if (key == "offset") in.offset = num();
      else if (key == "winding") in.winding = static_cast<int>(integer());
      else if (key == "k") in.k = static_cast<int>(integer());
      else if (key == "noise") in.noise = num();
      else if (key == "modes") in.modes = static_cast<int>(integer());
      else if (key == "mode") {
        std::istringstream is{std::string(value)};
        MultiIndex m{0, 0, 0};
        int count = 0;
        std::string tok;
        while (is >> tok) {
          auto v = detail::to_integer(tok);
          if (!v || count >= 3) detail::parse_fail(line_no, value_col, "'mode' expects up to three integers");
          m[count++] = static_cast<int>(*v);
        }
        if (count == 0) detail::parse_fail(line_no, value_col, "'mode' expects up to three integers");
        in.mode = m;
      } else unknown();
    } else if (section == "run") {
      auto& run = sc.run;
      if (key == "T") run.T = num();
      else if (key == "dt_policy") {
        if (value == "adaptive") run.dt.mode = DtPolicy::Mode::Adaptive;
        else if (value == "fixed") run.dt.mode = DtPolicy::Mode::Fixed;
        else detail::parse_fail(line_no, value_col, "dt_policy must be 'adaptive' or 'fixed'");
      } else if (key == "dt") run.dt.dt = num();
      else if (key == "safety") run.dt.safety = num();
      else if (key == "blowup_threshold") run.blowup_threshold = num();
      else if (key == "record_every") run.record_every = static_cast<int>(integer());
      else if (key == "snapshot_every") run.snapshot_every = static_cast<int>(integer());
      else unknown();
    } else if (section == "checks") {
      const auto& table = check_parameter_table();
      auto entry = table.find(key);
      if (entry == table.end()) detail::parse_fail(line_no, col0, "unknown check '" + key + "'");
      for (const auto& c : sc.checks) {
        if (c.name == key) detail::parse_fail(line_no, col0, "check '" + key + "' requested twice");
      }
      CheckSpec cs;
      cs.name = key;
      cs.line = line_no;
      bool has_tol = false;
      std::istringstream is{std::string(value)};
      std::string tok;
      while (is >> tok) {
        const auto peq = tok.find('=');
        if (peq == std::string::npos || peq == 0) {
          detail::parse_fail(line_no, value_col, "check parameter '" + tok + "' is not key=value");
        }
        const std::string pk = tok.substr(0, peq);
        const std::string pv = tok.substr(peq + 1);
        if (pk == "tol") {
          auto v = detail::to_double(pv);
          if (!v || !(*v >= 0.0)) detail::parse_fail(line_no, value_col, "tol must be a nonnegative number");
          cs.tol = *v;
          has_tol = true;
        } else if (!entry->second.count(pk)) {
          detail::parse_fail(line_no, value_col, "check '" + key + "' has no parameter '" + pk + "'");
        } else if (!cs.params.emplace(pk, pv).second) {
          detail::parse_fail(line_no, value_col, "parameter '" + pk + "' given twice");
        }
      }
      if (!has_tol) detail::parse_fail(line_no, value_col, "check '" + key + "' needs tol=<value>");
      sc.checks.push_back(std::move(cs));
    }
  }

  if (sc.name.empty()) detail::parse_fail(line_no, 1, "missing 'name'");

  // Validation of the assembled blocks.
  auto invalid = [](const std::string& what) { throw Error(ErrorKind::ValidationError, what); };
  const auto& g = sc.geometry;
  if (g.n != 2 && g.n != 3) invalid("geometry requires n in {2, 3}");
  if (!(g.L >= 4.0)) invalid("geometry requires L >= 4");
  if (g.N < 8 || g.N % 2 != 0) invalid("geometry requires even N >= 8");
  if (has_problem) {
    ProblemSpec p;
    p.n = g.n;
    auto get = [&](const char* k, double& dst) {
      if (auto it = problem_values.find(k); it != problem_values.end()) dst = it->second;
    };
    get("p", p.p);
    get("A", p.A);
    get("B", p.B);
    get("q", p.q);
    get("r", p.r);
    get("s", p.s);
    const bool qp = problem_values.count("q_prime"), lp = problem_values.count("lambda_prime");
    if (qp != lp) invalid("improved pair needs both q_prime and lambda_prime");
    if (qp) p.improved = ImprovedPair{problem_values["q_prime"], problem_values["lambda_prime"]};
    p.validate();
    sc.problem = p;
  }
  if (!(sc.run.T > 0.0)) invalid("run requires T > 0");
  if (sc.run.dt.mode == DtPolicy::Mode::Fixed && !(sc.run.dt.dt > 0.0)) invalid("fixed dt policy requires dt > 0");
  if (!(sc.run.dt.safety > 0.0)) invalid("run requires safety > 0");
  if (sc.run.record_every < 1) invalid("run requires record_every >= 1");
  if (sc.run.snapshot_every < 0) invalid("run requires snapshot_every >= 0");
  if (sc.initial.k < 2) invalid("initial requires k >= 2");
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace morreylab
