#pragma once

// Named checks referenced from scenario files. Each check builds its inputs
// from the scenario, calls the module operations and reduces the outcome to
// one measured number against one tolerance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "morreylab/heat_kernel.hpp"
#include "morreylab/hmf.hpp"
#include "morreylab/morrey.hpp"
#include "morreylab/oracle.hpp"
#include "morreylab/profiles.hpp"
#include "morreylab/scenario.hpp"
#include "morreylab/semilinear.hpp"

namespace morreylab {

struct Artifact {
  std::string filename;
  std::string content;
};

enum class Comparison {
  AtMost,         ///< measured <= tolerance
  AtLeast,        ///< measured >= tolerance
  RelativeToTarget,  ///< |measured - target| <= tolerance * |target| (absolute when target = 0)
  AbsoluteToTarget,  ///< |measured - target| <= tolerance
};

inline const char* to_string(Comparison c) {
  switch (c) {
    case Comparison::AtMost: return "measured <= tolerance";
    case Comparison::AtLeast: return "measured >= tolerance";
    case Comparison::RelativeToTarget: return "|measured - target| <= tolerance * |target|";
    case Comparison::AbsoluteToTarget: return "|measured - target| <= tolerance";
  }
  return "?";
}

struct CheckResult {
  std::string name;
  Comparison comparison = Comparison::AtMost;
  double target = std::numeric_limits<double>::quiet_NaN();
  double measured = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.0;
  bool pass = false;
  std::string error;  ///< set when the check threw
  nlohmann::json detail = nlohmann::json::object();
  std::vector<Artifact> artifacts;
};

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json to_json(const CheckResult& r) {
  nlohmann::json j = {{"name", r.name},
                      {"comparison", to_string(r.comparison)},
                      {"target", finite_or_null(r.target)},
                      {"measured", std::isinf(r.measured) ? nlohmann::json("inf") : finite_or_null(r.measured)},
                      {"tolerance", r.tolerance},
                      {"pass", r.pass},
                      {"detail", r.detail}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

/// Shared state of one scenario run: tolerance scaling and trajectories that
/// several checks reuse.
class CheckContext {
 public:
  CheckContext(const Scenario& sc, double tol_factor) : sc_(sc), tol_factor_(tol_factor) {}

  const Scenario& scenario() const { return sc_; }
  double tol_factor() const { return tol_factor_; }

  const Trajectory& trajectory(int N);
  const HmfTrajectory& hmf_trajectory();

 private:
  const Scenario& sc_;
  double tol_factor_;
  std::map<int, std::unique_ptr<Trajectory>> traj_;
  std::unique_ptr<HmfTrajectory> hmf_;
};

// ---------------------------------------------------------------------------
// Inputs from the scenario.

inline ScalarField initial_scalar(const Scenario& sc, const TorusGeometry& geom) {
  const auto& in = sc.initial;
  if (in.profile == "constant") return profiles::constant(geom, in.amplitude);
  if (in.profile == "spike") return profiles::spike(geom, in.amplitude);
  if (in.profile == "power") return profiles::power_spike(geom, in.exponent, in.amplitude);
  if (in.profile == "bubble") return profiles::bubble(geom, sc.require_problem().p, in.amplitude, in.width);
  if (in.profile == "fourier_mode") {
    auto f = profiles::fourier_mode(geom, in.mode, in.amplitude);
    for (double& v : f.values) v += in.offset;
    return f;
  }
  throw Error(ErrorKind::InvalidArgument, "profile '" + in.profile + "' is not a scalar profile");
}

inline MapField initial_map(const Scenario& sc, const TorusGeometry& geom) {
  const auto& in = sc.initial;
  if (in.profile == "constant") return maps::constant_map(geom, in.k);
  if (in.profile == "bump_map") return maps::bump_map(geom, in.k, in.amplitude, in.width);
  if (in.profile == "random_map") return maps::random_small_map(geom, in.k, in.amplitude, in.modes, sc.seed);
  if (in.profile == "winding_map") {
    MapField w = maps::winding_map(geom, in.winding);
    if (in.noise > 0.0) {
      std::mt19937_64 rng(sc.seed);
      std::uniform_real_distribution<double> u(-in.noise, in.noise);
      for (auto& c : w.comp) {
        for (double& v : c) v += u(rng);
      }
      w = project_to_sphere(std::move(w));
    }
    return w;
  }
  throw Error(ErrorKind::InvalidArgument, "profile '" + in.profile + "' is not a map profile");
}

inline EvolveOptions evolve_options(const Scenario& sc) {
  EvolveOptions o;
  o.dt = sc.run.dt;
  o.blowup_threshold = sc.run.blowup_threshold;
  o.record_every = sc.run.record_every;
  o.snapshot_every = sc.run.snapshot_every;
  return o;
}

inline HmfOptions hmf_options(const Scenario& sc) {
  HmfOptions o;
  o.dt = sc.run.dt;
  o.record_every = sc.run.record_every;
  o.snapshot_every = sc.run.snapshot_every;
  return o;
}

inline TorusGeometry with_points(const Scenario& sc, int N) { return TorusGeometry(sc.geometry.n, sc.geometry.L, N); }

inline const Trajectory& CheckContext::trajectory(int N) {
  auto& slot = traj_[N];
  if (!slot) {
    const auto geom = with_points(sc_, N);
    slot = std::make_unique<Trajectory>(evolve(initial_scalar(sc_, geom), sc_.require_problem(), sc_.run.T,
                                               evolve_options(sc_)));
  }
  return *slot;
}

inline const HmfTrajectory& CheckContext::hmf_trajectory() {
  if (!hmf_) {
    hmf_ = std::make_unique<HmfTrajectory>(evolve_hmf(initial_map(sc_, sc_.make_geometry()), sc_.run.T, hmf_options(sc_)));
  }
  return *hmf_;
}

inline std::string csv_of(const Trajectory& t) {
  std::ostringstream os;
  write_csv(t, os);
  return os.str();
}

inline std::string csv_of(const HmfTrajectory& t) {
  std::ostringstream os;
  write_csv(t, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Verdicts.

inline void decide(CheckResult& r, double factor) {
  const double tol = r.comparison == Comparison::AtLeast ? r.tolerance / factor : r.tolerance * factor;
  r.tolerance = tol;
  const double m = r.measured;
  switch (r.comparison) {
    case Comparison::AtMost: r.pass = m <= tol; break;
    case Comparison::AtLeast: r.pass = m >= tol; break;
    case Comparison::RelativeToTarget:
      r.pass = r.target == 0.0 ? std::abs(m) <= tol : std::abs(m - r.target) <= tol * std::abs(r.target);
      break;
    case Comparison::AbsoluteToTarget: r.pass = std::abs(m - r.target) <= tol; break;
  }
}

inline double relative_sup_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return s > 0.0 ? d / s : d;
}

inline nlohmann::json to_json(const RefinementVerdict& v) {
  return {{"coarse", v.coarse},
          {"fine", v.fine},
          {"order", std::isinf(v.order) ? nlohmann::json("inf") : finite_or_null(v.order)},
          {"below_floor", v.below_floor}};
}

// ---------------------------------------------------------------------------
// The checks.

namespace checks {

using Fn = void (*)(CheckContext&, const CheckSpec&, CheckResult&);

inline std::vector<double> time_grid(const CheckSpec& cs, double t_min, double t_max, double samples) {
  return log_spaced(cs.number("t_min", t_min), cs.number("t_max", t_max), static_cast<int>(cs.number("samples", samples)));
}

inline void mode_propagation(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  const double t = cs.number("t", 0.5);
  const auto f = profiles::fourier_mode(geom, sc.initial.mode, sc.initial.amplitude);
  const HeatSemigroup heat(geom);
  double k2 = 0.0;
  for (int a = 0; a < geom.dim(); ++a) {
    const double k = 2.0 * std::numbers::pi * sc.initial.mode[a] / geom.period();
    k2 += k * k;
  }
  auto exact = f.values;
  for (double& v : exact) v *= std::exp(-k2 * t);
  r.measured = relative_sup_difference(heat.propagate(f, t).values, exact);
  r.detail = {{"t", t}, {"k_squared", k2}};
}

inline void semigroup_property(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  const double t1 = cs.number("t1", 0.1), t2 = cs.number("t2", 0.25);
  const auto f = initial_scalar(sc, geom);
  const HeatSemigroup heat(geom);
  const auto two_step = heat.propagate(heat.propagate(f, t2), t1);
  const auto one_step = heat.propagate(f, t1 + t2);
  r.measured = relative_sup_difference(two_step.values, one_step.values);
  r.detail = {{"t1", t1}, {"t2", t2}};
}

inline void mass_conservation(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto geom = ctx.scenario().make_geometry();
  const auto ts = time_grid(cs, 0.05, 1.0, 6);
  const HeatSemigroup heat(geom);
  const auto delta = profiles::spike(geom, 1.0);
  double semigroup_err = 0.0, kernel_err = 0.0;
  for (double t : ts) {
    semigroup_err = std::max(semigroup_err, std::abs(heat.propagate(delta, t).integral() - 1.0));
    double s = 0.0;
    for (std::size_t y = 0; y < geom.size(); ++y) s += kernel_eval(geom, 0, y, t);
    kernel_err = std::max(kernel_err, std::abs(s * geom.cell_volume() - 1.0));
  }
  r.measured = std::max(semigroup_err, kernel_err);
  r.detail = {{"semigroup_error", semigroup_err}, {"image_sum_error", kernel_err}, {"times", ts}};
}

inline void gaussian_bounds(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto ts = time_grid(cs, 1e-3, 1.0, 13);
  const auto coarse_geom = sc.make_geometry();
  const auto fine_geom = with_points(sc, static_cast<int>(cs.number("N_fine", 2.0 * sc.geometry.N)));
  const auto coarse = fit_gaussian_bounds(coarse_geom, ts, orthant_sample_pairs(coarse_geom));
  const auto fine = fit_gaussian_bounds(fine_geom, ts, orthant_sample_pairs(fine_geom));
  const bool finite = std::isfinite(coarse.c_upper) && std::isfinite(coarse.c_lower) &&
                      std::isfinite(fine.c_upper) && std::isfinite(fine.c_lower);
  r.measured = finite ? std::max(std::abs(fine.c_upper / coarse.c_upper - 1.0), std::abs(fine.c_lower / coarse.c_lower - 1.0))
                      : kInf;
  r.detail = {{"c_upper", {coarse.c_upper, fine.c_upper}},
              {"c_lower", {coarse.c_lower, fine.c_lower}},
              {"N", {coarse_geom.points_per_axis(), fine_geom.points_per_axis()}},
              {"samples", {coarse.samples, fine.samples}}};
}

inline void smoothing_exponent_check(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  const auto f = initial_scalar(sc, geom);
  const HeatSemigroup heat(geom);
  const MorreyEvaluator eval(geom, CenterSet::AllGridPoints);
  const auto fit = smoothing_exponent(f, cs.number("s1", 1.0), cs.number("s2", kInf), cs.number("lambda", geom.dim()),
                                      time_grid(cs, 1e-3, 1e-1, 8), eval, heat);
  r.comparison = Comparison::RelativeToTarget;
  r.target = fit.target_exponent;
  r.measured = fit.fitted_exponent;
  r.detail = to_json(fit);
}

inline void gradient_exponent(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  const HeatSemigroup heat(geom);
  const auto g = gradient_estimate_check(initial_scalar(sc, geom), cs.number("q", 1.0), cs.number("r", kInf),
                                         time_grid(cs, 1e-3, 1e-1, 8), heat);
  r.comparison = Comparison::RelativeToTarget;
  r.target = g.from_data.target_exponent;
  r.measured = g.from_data.fitted_exponent;
  r.detail = to_json(g.from_data);
}

inline void gradient_constant(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  const HeatSemigroup heat(geom);
  const auto g = gradient_estimate_check(initial_scalar(sc, geom), cs.number("q", 2.0), cs.number("r", 2.0),
                                         time_grid(cs, 1e-3, 1.0, 10), heat);
  r.measured = g.from_gradient.constant_hat;
  r.detail = to_json(g.from_gradient);
}

inline void decay_rate(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto& traj = ctx.trajectory(sc.geometry.N);
  const std::string target = cs.text("target", "improved");
  if (target != "improved" && target != "critical") {
    throw Error(ErrorKind::InvalidArgument, "decay_rate target must be 'improved' or 'critical'");
  }
  const auto fit = fit_decay(traj, cs.number("t_min", 1e-3), cs.number("t_max", sc.run.T),
                             target == "improved" ? DecayTarget::Improved : DecayTarget::Critical);
  r.comparison = Comparison::RelativeToTarget;
  r.target = fit.target_exponent;
  r.measured = fit.fitted_exponent;
  r.detail = to_json(fit);
  r.artifacts.push_back({"trajectory.csv", csv_of(traj)});
}

inline void constant_oracle(CheckContext& ctx, const CheckSpec&, CheckResult& r) {
  const auto& sc = ctx.scenario();
  if (sc.initial.profile != "constant") throw Error(ErrorKind::InvalidArgument, "constant_oracle needs constant data");
  const auto& spec = sc.require_problem();
  const auto& traj = ctx.trajectory(sc.geometry.N);
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < traj.step_times.size(); ++i) {
    const double exact = constant_solution(spec, sc.initial.amplitude, traj.step_times[i]);
    if (!std::isfinite(exact) || !std::isfinite(traj.step_sup[i])) break;
    worst = std::max(worst, std::abs(traj.step_sup[i] - exact) / exact);
    ++compared;
  }
  r.measured = worst;
  r.detail = {{"steps_compared", compared}, {"final_time", traj.final_time()}};
  r.artifacts.push_back({"trajectory.csv", csv_of(traj)});
}

inline void convergence_order_check(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  const auto study = convergence_order(initial_scalar(sc, geom), sc.require_problem(), sc.run.T,
                                       cs.numbers("dts", {0.02, 0.01, 0.005, 0.0025}),
                                       cs.number("reference_factor", 8.0));
  r.comparison = Comparison::AbsoluteToTarget;
  r.target = 2.0;
  r.measured = study.order;
  r.detail = {{"dts", study.dts}, {"errors", study.errors}, {"reference_dt", study.reference_dt}};
}

inline void blowup_time(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  if (sc.initial.profile != "constant") throw Error(ErrorKind::InvalidArgument, "blowup_time needs constant data");
  const auto& spec = sc.require_problem();
  auto opts = evolve_options(sc);
  const auto study = blowup_study(sc.make_geometry(), spec, {sc.initial.amplitude}, sc.run.T,
                                  cs.number("threshold_factor", 1e6), opts);
  const auto& rec = study.front();
  r.comparison = Comparison::RelativeToTarget;
  r.target = rec.analytic;
  r.measured = rec.detected ? rec.extrapolated : kInf;
  r.detail = {{"detected", rec.detected},
              {"time_at_threshold", finite_or_null(rec.time_at_threshold)},
              {"time_at_double_threshold", finite_or_null(rec.time_at_double)},
              {"extrapolated", finite_or_null(rec.extrapolated)},
              {"analytic", finite_or_null(rec.analytic)}};
}

inline void no_blowup(CheckContext& ctx, const CheckSpec&, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto& traj = ctx.trajectory(sc.geometry.N);
  const auto b = detect_blowup(traj);
  r.comparison = Comparison::AtMost;
  r.measured = b.detected ? 1.0 : 0.0;
  r.detail = {{"outcome", b.detected ? "Blowup" : "NoBlowupInWindow"},
              {"window", {0.0, sc.run.T}},
              {"threshold", b.threshold},
              {"max_sup_norm", *std::max_element(traj.step_sup.begin(), traj.step_sup.end())},
              {"blowup_time", finite_or_null(b.time)}};
  r.artifacts.push_back({"trajectory.csv", csv_of(traj)});
}

inline void critical_envelope(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto grids = cs.numbers("grids", {48.0, 64.0});
  std::vector<double> constants;
  nlohmann::json per_grid = nlohmann::json::array();
  for (double Nd : grids) {
    const int N = static_cast<int>(Nd);
    const auto& traj = ctx.trajectory(N);
    const auto fit = fit_decay(traj, traj.step_times.at(1), sc.run.T, DecayTarget::Critical);
    constants.push_back(fit.constant_hat);
    per_grid.push_back({{"N", N}, {"constant_hat", fit.constant_hat}, {"delta", traj.delta_running}});
    r.artifacts.push_back({"trajectory_N" + std::to_string(N) + ".csv", csv_of(traj)});
  }
  const double lo = *std::min_element(constants.begin(), constants.end());
  const double hi = *std::max_element(constants.begin(), constants.end());
  const bool finite = std::all_of(constants.begin(), constants.end(), [](double c) { return std::isfinite(c) && c > 0.0; });
  r.measured = finite ? (hi - lo) / lo : kInf;
  r.detail = {{"grids", per_grid}};
}

inline void morrey_small(CheckContext& ctx, const CheckSpec&, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto& traj = ctx.trajectory(sc.geometry.N);
  const auto s = morrey_stays_small(traj);
  r.measured = s.max_ratio;
  r.detail = {{"delta", s.delta}, {"at_time", s.at_time}};
}

inline void subsolution_refinement(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  if (sc.run.dt.mode != DtPolicy::Mode::Fixed) throw Error(ErrorKind::InvalidArgument, "refinement study needs a fixed dt");
  const double t0 = cs.number("t_start", 0.0), t1 = cs.number("t_end", sc.run.T);
  std::vector<double> viol;
  for (int level = 0; level < 2; ++level) {
    const auto geom = with_points(sc, sc.geometry.N << level);
    auto opts = evolve_options(sc);
    opts.dt = DtPolicy::fixed(sc.run.dt.dt / (1 << level));
    opts.snapshot_every = 1;
    opts.monitor_morrey = false;
    const auto traj = evolve(initial_scalar(sc, geom), sc.require_problem(), sc.run.T, opts);
    viol.push_back(verify_subsolution(traj, t0, t1).relative_violation);
  }
  const auto v = refinement_verdict(viol[0], viol[1], cs.number("floor", 1e-12), cs.tol);
  r.comparison = Comparison::AtLeast;
  r.measured = v.below_floor ? kInf : v.order;
  r.detail = to_json(v);
}

inline void remainder_ratios(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  auto opts = evolve_options(sc);
  opts.snapshot_every = 1;
  opts.monitor_morrey = false;
  const auto geom = sc.make_geometry();
  const auto traj = evolve(initial_scalar(sc, geom), sc.require_problem(), sc.run.T, opts);
  const auto rep = integrating_factor_check(traj, cs.number("t_start", 0.0), cs.number("t_end", sc.run.T));
  double worst = 0.0;
  for (std::size_t l = 0; l < rep.remainder_ratio.size(); ++l) {
    if (rep.ratio_bound[l] > 0.0) worst = std::max(worst, rep.remainder_ratio[l] / rep.ratio_bound[l]);
  }
  r.measured = worst;
  r.detail = {{"ratios", rep.remainder_ratio},
              {"bounds", rep.ratio_bound},
              {"remainder_sup", rep.remainder_sup},
              {"reduced_violation", rep.reduced.max_violation}};
}

inline void hmf_converges(CheckContext& ctx, const CheckSpec&, CheckResult& r) {
  const auto& traj = ctx.hmf_trajectory();
  const auto c = convergence_to_constant(traj);
  r.measured = c.sup_distance;
  r.detail = {{"limit_point", c.limit_point}, {"final_energy", c.final_energy}, {"max_sphere_deviation", traj.max_sphere_deviation}};
  r.artifacts.push_back({"diagnostics.csv", csv_of(traj)});
}

inline void hmf_energy_rate(CheckContext& ctx, const CheckSpec&, CheckResult& r) {
  const auto& traj = ctx.hmf_trajectory();
  const auto c = convergence_to_constant(traj);
  r.comparison = Comparison::RelativeToTarget;
  r.target = linearized_energy_rate(traj.geom);
  r.measured = c.fitted_rate > 0.0 ? c.fitted_rate : -kInf;
  r.detail = {{"fitted_rate", c.fitted_rate}, {"third_quarter_rate", c.early_rate}, {"last_quarter_rate", c.late_rate}};
}

inline void winding_control(CheckContext& ctx, const CheckSpec&, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto& traj = ctx.hmf_trajectory();
  const auto c = convergence_to_constant(traj);
  const double closed = winding_energy(traj.geom, sc.initial.winding);
  r.comparison = Comparison::AtMost;
  r.target = closed;
  r.measured = c.is_converged ? kInf : std::abs(c.final_energy / closed - 1.0);
  r.detail = {{"converged_to_constant", c.is_converged},
              {"sup_distance_to_constant", c.sup_distance},
              {"final_energy", c.final_energy},
              {"closed_form_energy", closed}};
  r.artifacts.push_back({"diagnostics.csv", csv_of(traj)});
}

inline void wang_contraction(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const int iterate = static_cast<int>(cs.number("iterate", 4));
  const int iterations = std::max(iterate, static_cast<int>(cs.number("iterations", iterate)));
  const auto rep = wang_iterate(initial_map(sc, sc.make_geometry()), cs.number("T", std::min(sc.run.T, 1.0)), iterations,
                                static_cast<std::size_t>(cs.number("time_steps", 100)));
  double worst = 0.0;
  for (int j = 1; j < iterate && j < static_cast<int>(rep.iterates.size()); ++j) worst = std::max(worst, rep.iterates[j].ratio);
  r.measured = worst;
  r.detail = to_json(rep);
  r.artifacts.push_back({"wang.json", to_json(rep).dump(2) + "\n"});
}

inline void bochner_subsolution(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  if (sc.run.dt.mode != DtPolicy::Mode::Fixed) throw Error(ErrorKind::InvalidArgument, "refinement study needs a fixed dt");
  const double t0 = cs.number("t_start", 0.0), t1 = cs.number("t_end", sc.run.T);
  std::vector<double> viol;
  nlohmann::json levels = nlohmann::json::array();
  for (int level = 0; level < 2; ++level) {
    const auto geom = with_points(sc, sc.geometry.N << level);
    auto opts = hmf_options(sc);
    opts.dt = DtPolicy::fixed(sc.run.dt.dt / (1 << level));
    opts.snapshot_every = 1;
    opts.record_every = std::numeric_limits<int>::max();
    const auto traj = evolve_hmf(initial_map(sc, geom), sc.run.T, opts);
    const auto rep = bochner_subsolution_check(traj, t0, t1);
    viol.push_back(rep.relative_violation);
    levels.push_back({{"N", geom.points_per_axis()}, {"max_violation", rep.max_violation}, {"min_margin", rep.min_margin}});
  }
  const auto v = refinement_verdict(viol[0], viol[1], cs.number("floor", 1e-12), cs.tol);
  r.comparison = Comparison::AtLeast;
  r.measured = v.below_floor ? kInf : v.order;
  r.detail = to_json(v);
  r.detail["levels"] = levels;
}

inline void oracle_equivalence(CheckContext& ctx, const CheckSpec& cs, CheckResult& r) {
  const auto& sc = ctx.scenario();
  const auto geom = sc.make_geometry();
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto radii = dyadic_radii(geom);
  double worst = 0.0;
  std::size_t comparisons = 0;
  // Ball membership and cover centres.
  for (double R : radii) {
    const BallCover cover(geom, R);
    auto centers = cover.centers();
    if (centers != oracle::cover_centers(geom, R)) worst = kInf;
    for (std::size_t c = 0; c < geom.size(); ++c) {
      auto a = cover.member_indices(c);
      auto b = oracle::ball_members(geom, c, R);
      std::sort(a.begin(), a.end());
      if (a != b) worst = kInf;
      ++comparisons;
    }
  }
  const int trials = static_cast<int>(cs.number("trials", 5));
  const double n = geom.dim();
  for (int trial = 0; trial < trials; ++trial) {
    ScalarField f(geom);
    for (double& v : f.values) v = u(rng);
    for (CenterSet centers : {CenterSet::Cover, CenterSet::AllGridPoints}) {
      const MorreyEvaluator eval(geom, radii, centers);
      for (double q : {1.0, 2.0, 3.5}) {
        for (double lambda : {0.0, 1.0, n}) {
          const double fast = eval.norm(f, {q, lambda});
          const double slow = oracle::morrey_norm(f, {q, lambda}, radii, centers);
          worst = std::max(worst, std::abs(fast - slow) / slow);
          ++comparisons;
        }
      }
    }
    const double ls_fast = sup_ls_on_unit_balls(f, 2.0, BallCover(geom, 1.0));
    const double ls_slow = oracle::morrey_norm(f, {2.0, n}, {1.0}, CenterSet::Cover);
    worst = std::max(worst, std::abs(ls_fast - ls_slow) / ls_slow);
  }
  r.measured = worst;
  r.detail = {{"comparisons", comparisons}, {"radii", radii}};
}

struct Entry {
  Fn fn;
  Comparison comparison;
};

inline const std::map<std::string, Entry, std::less<>>& registry() {
  static const std::map<std::string, Entry, std::less<>> table = {
      {"mode_propagation", {mode_propagation, Comparison::AtMost}},
      {"semigroup_property", {semigroup_property, Comparison::AtMost}},
      {"mass_conservation", {mass_conservation, Comparison::AtMost}},
      {"gaussian_bounds", {gaussian_bounds, Comparison::AtMost}},
      {"smoothing_exponent", {smoothing_exponent_check, Comparison::RelativeToTarget}},
      {"gradient_exponent", {gradient_exponent, Comparison::RelativeToTarget}},
      {"gradient_constant", {gradient_constant, Comparison::AtMost}},
      {"decay_rate", {decay_rate, Comparison::RelativeToTarget}},
      {"constant_oracle", {constant_oracle, Comparison::AtMost}},
      {"convergence_order", {convergence_order_check, Comparison::AbsoluteToTarget}},
      {"blowup_time", {blowup_time, Comparison::RelativeToTarget}},
      {"no_blowup", {no_blowup, Comparison::AtMost}},
      {"critical_envelope", {critical_envelope, Comparison::AtMost}},
      {"morrey_small", {morrey_small, Comparison::AtMost}},
      {"subsolution_refinement", {subsolution_refinement, Comparison::AtLeast}},
      {"remainder_ratios", {remainder_ratios, Comparison::AtMost}},
      {"hmf_converges", {hmf_converges, Comparison::AtMost}},
      {"hmf_energy_rate", {hmf_energy_rate, Comparison::RelativeToTarget}},
      {"winding_control", {winding_control, Comparison::AtMost}},
      {"wang_contraction", {wang_contraction, Comparison::AtMost}},
      {"bochner_subsolution", {bochner_subsolution, Comparison::AtLeast}},
      {"oracle_equivalence", {oracle_equivalence, Comparison::AtMost}},
  };
  return table;
}

}  // namespace checks

/// Runs one named check; exceptions become a failed result carrying the
/// error kind and message.
inline CheckResult run_check(CheckContext& ctx, const CheckSpec& cs) {
  CheckResult r;
  r.name = cs.name;
  r.tolerance = cs.tol;
  const auto& table = checks::registry();
  auto it = table.find(cs.name);
  if (it == table.end()) {
    r.error = "unknown check";
    return r;
  }
  r.comparison = it->second.comparison;
  try {
    it->second.fn(ctx, cs, r);
    decide(r, ctx.tol_factor());
  } catch (const Error& e) {
    r.pass = false;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.pass = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace morreylab
