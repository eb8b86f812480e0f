#pragma once

// Mild solutions of u_t = Lap u + A u^p + B u on the torus and the
// diagnostics that compare them against the Morrey-space estimates.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "morreylab/field.hpp"
#include "morreylab/fit.hpp"
#include "morreylab/heat_kernel.hpp"
#include "morreylab/morrey.hpp"
#include "morreylab/profiles.hpp"
#include "morreylab/spectral.hpp"

namespace morreylab {

struct ImprovedPair {
  double q = 0.0;       ///< q'
  double lambda = 0.0;  ///< lambda'
};

/// One instance of the inequality class: exponents, coefficients and the
/// Morrey data they induce.
struct ProblemSpec {
  int n = 3;
  double p = 3.0;
  double A = 1.0;
  double B = 0.0;
  double q = 2.0;
  double r = 3.0;
  double s = 1.0;  ///< exponent of the local L^s smallness term
  std::optional<ImprovedPair> improved;

  double critical_exponent() const { return 0.5 * n * (p - 1.0); }
  double lambda() const { return 2.0 * q / (p - 1.0); }
  double beta() const { return 0.5 * lambda() * (1.0 / q - 1.0 / r); }
  double alpha() const { return improved ? improved->lambda / (2.0 * improved->q) : 0.0; }
  double decay_exponent() const { return 1.0 / (p - 1.0); }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::ValidationError, what); };
    if (n != 2 && n != 3) fail("dimension must be 2 or 3");
    if (!(p > 1.0 + 2.0 / n)) fail("solution class requires p > 1 + 2/n");
    if (!(A >= 0.0 && B >= 0.0)) fail("solution class requires A >= 0 and B >= 0");
    const double qc = critical_exponent();
    if (!(q > 1.0 && q <= qc + 1e-12)) fail("solution class requires 1 < q <= q_c = n(p-1)/2");
    if (!(r / p >= 1.0 && r / p < q && q < r)) fail("solution class requires 1 <= r/p < q < r");
    if (!(beta() < 1.0 / p)) fail("solution class requires beta = (lambda/2)(1/q - 1/r) < 1/p");
    if (!(s >= 1.0 && s <= qc + 1e-12)) fail("smallness exponent requires 1 <= s <= q_c");
    if (improved) {
      if (!(improved->q >= 1.0 && improved->lambda >= 0.0 && improved->lambda <= n)) {
        fail("improved pair requires q' >= 1 and 0 <= lambda' <= n");
      }
      if (!(improved->q > q || improved->lambda < lambda())) {
        fail("improved pair requires q' > q or lambda' < 2q/(p-1)");
      }
      if (!(alpha() < decay_exponent())) fail("improved pair requires alpha = lambda'/(2q') < 1/(p-1)");
    }
  }
};

struct DtPolicy {
  enum class Mode { Adaptive, Fixed };
  Mode mode = Mode::Adaptive;
  double dt = 0.0;             ///< step for Mode::Fixed
  double safety = 0.1;         ///< dt = safety * min(h^2, 1/(A|u|^{p-1} + B))
  double dt_max = kInf;
  double change_limit = 0.1;   ///< halve when the nonlinear increment exceeds this fraction of |u|_inf

  static DtPolicy fixed(double dt) {
    DtPolicy p;
    p.mode = Mode::Fixed;
    p.dt = dt;
    return p;
  }
};

struct EvolveOptions {
  DtPolicy dt;
  double blowup_threshold = 0.0;  ///< 0 selects 1e6 * |u0|_inf
  int record_every = 1;           ///< norm rows every k steps (first and last always)
  int snapshot_every = 0;         ///< stored fields every k steps; 0 keeps first and last only
  bool monitor_morrey = true;
  double nonnegativity_tol = 1e-12;
  std::size_t max_steps = 20'000'000;
};

struct NormRow {
  double t = 0.0;
  double sup_norm = 0.0;
  double morrey_q_lambda = 0.0;
  double morrey_r_lambda = 0.0;
  double sup_ls_unit_balls = 0.0;
  double clipped_mass = 0.0;  ///< cumulative
};

struct Snapshot {
  double t = 0.0;
  ScalarField u;
};

struct Trajectory {
  Trajectory(const TorusGeometry& g, const ProblemSpec& s) : geom(g), spec(s) {}

  TorusGeometry geom;
  ProblemSpec spec;
  std::vector<NormRow> rows;
  std::vector<Snapshot> snapshots;
  std::vector<double> step_times;  ///< every accepted step, starting at 0
  std::vector<double> step_sup;    ///< |u|_inf after every accepted step
  bool blew_up = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  double blowup_threshold = kInf;
  double clipped_mass = 0.0;
  double delta_initial = 0.0;  ///< |u0|_{q,lambda} + sup_x |u0|_{L^s(B_1(x))}
  double delta_running = 0.0;  ///< same with the running sup over recorded times
  bool delta_exceeded = false;
  std::size_t steps = 0;
  std::size_t rejected_steps = 0;

  double final_time() const { return step_times.empty() ? 0.0 : step_times.back(); }
};

namespace detail {

/// phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2.
inline void phi_functions(double z, double& phi1, double& phi2) {
  if (std::abs(z) < 1e-3) {
    phi1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
    phi2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0;
  } else {
    const double em1 = std::expm1(z);
    phi1 = em1 / z;
    phi2 = (em1 - z) / (z * z);
  }
}

/// Per-coefficient weights of the second-order exponential Runge-Kutta step
/// for a diagonal linear part.
struct EtdCoefficients {
  double dt = -1.0;
  std::vector<double> decay;  ///< e^{L dt}
  std::vector<double> w1;     ///< dt phi_1(L dt)
  std::vector<double> w2;     ///< dt phi_2(L dt)

  void update(const std::vector<double>& k2, double shift, double step) {
    if (step == dt) return;
    dt = step;
    decay.resize(k2.size());
    w1.resize(k2.size());
    w2.resize(k2.size());
    for (std::size_t i = 0; i < k2.size(); ++i) {
      const double z = (shift - k2[i]) * step;
      double p1, p2;
      phi_functions(z, p1, p2);
      decay[i] = std::exp(z);
      w1[i] = step * p1;
      w2[i] = step * p2;
    }
  }
};

/// out = max(v, 0)^p with a multiplication fast path for small integer p.
inline void positive_power(const std::vector<double>& v, double p, std::vector<double>& out) {
  out.resize(v.size());
  const double ip = std::round(p);
  if (ip == p && ip >= 1.0 && ip <= 8.0) {
    const int k = static_cast<int>(ip);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = std::max(v[i], 0.0);
      double y = x;
      for (int j = 1; j < k; ++j) y *= x;
      out[i] = y;
    }
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::pow(std::max(v[i], 0.0), p);
  }
}

inline double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Norm monitor for (q, lambda), (r, lambda) and the local L^s term.
class NormMonitor {
 public:
  NormMonitor(const TorusGeometry& geom, const ProblemSpec& spec)
      : spec_(spec), morrey_(geom, CenterSet::AllGridPoints), unit_(geom, {1.0}, CenterSet::AllGridPoints) {}

  double morrey_q(const std::vector<double>& u) const { return morrey_.norm(u, {spec_.q, spec_.lambda()}); }
  double morrey_r(const std::vector<double>& u) const { return morrey_.norm(u, {spec_.r, spec_.lambda()}); }
  double local_ls(const std::vector<double>& u) const {
    return unit_.norm(u, {spec_.s, static_cast<double>(unit_.geometry().dim())});
  }
  const MorreyEvaluator& evaluator() const { return morrey_; }

 private:
  ProblemSpec spec_;
  MorreyEvaluator morrey_;
  MorreyEvaluator unit_;
};

/// Second-order exponential Runge-Kutta integration of the mild formulation.
/// The linear part Lap + B is applied exactly through spectral multipliers.
inline Trajectory evolve(const ScalarField& u0, const ProblemSpec& spec, double T, const EvolveOptions& opts = {}) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "final time must be positive");
  const TorusGeometry& geom = u0.geom;
  if (spec.n != geom.dim()) throw Error(ErrorKind::InvalidArgument, "problem dimension does not match geometry");
  const double scale0 = u0.max_abs();
  if (u0.min() < -opts.nonnegativity_tol * std::max(scale0, 1.0)) {
    throw Error(ErrorKind::NonnegativityViolation, "initial data must be nonnegative");
  }

  Trajectory traj{geom, spec};
  traj.blowup_threshold = opts.blowup_threshold > 0.0 ? opts.blowup_threshold : 1e6 * scale0;
  const Spectral spectral(geom);
  const auto& k2 = spectral.k_squared();
  std::optional<NormMonitor> monitor;
  if (opts.monitor_morrey) monitor.emplace(geom, spec);

  std::vector<double> u(u0.values);
  for (double& v : u) v = std::max(v, 0.0);
  const double cv = geom.cell_volume();
  const double h2 = geom.spacing() * geom.spacing();

  auto record = [&](double t, double sup) {
    NormRow row;
    row.t = t;
    row.sup_norm = sup;
    row.clipped_mass = traj.clipped_mass;
    if (monitor) {
      row.morrey_q_lambda = monitor->morrey_q(u);
      row.morrey_r_lambda = monitor->morrey_r(u);
      row.sup_ls_unit_balls = monitor->local_ls(u);
    }
    traj.rows.push_back(row);
  };

  double t = 0.0;
  double sup = detail::sup_abs(u);
  traj.step_times.push_back(0.0);
  traj.step_sup.push_back(sup);
  record(0.0, sup);
  traj.snapshots.push_back({0.0, ScalarField(geom, u)});
  if (monitor) {
    traj.delta_initial = traj.rows.front().morrey_q_lambda + traj.rows.front().sup_ls_unit_balls;
  }
  double running_ls = traj.rows.front().sup_ls_unit_balls;

  detail::EtdCoefficients coef;
  const bool nonlinear = spec.A > 0.0;
  auto nonlinearity = [&](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    detail::positive_power(v, spec.p, out);
    for (double& x : out) x *= spec.A;
    return out;
  };

  std::vector<Complex> uh(spectral.spectral_size()), nh, stage(spectral.spectral_size());
  while (t < T * (1.0 - 1e-14)) {
    if (traj.steps >= opts.max_steps) throw Error(ErrorKind::StepCollapse, "step budget exhausted before T");
    double dt;
    if (opts.dt.mode == DtPolicy::Mode::Fixed) {
      dt = opts.dt.dt;
    } else {
      const double rate = spec.A * std::pow(sup, spec.p - 1.0) + spec.B;
      dt = opts.dt.safety * (rate > 0.0 ? std::min(h2, 1.0 / rate) : h2);
      dt = std::min(dt, opts.dt.dt_max);
    }
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "time step must be positive");
    dt = std::min(dt, T - t);

    spectral.forward(u, uh);
    if (nonlinear) nh = spectral.forward(nonlinearity(u));
    std::vector<double> next;
    for (;;) {
      if (t + dt == t) throw Error(ErrorKind::StepCollapse, "time step underflow before reaching T");
      coef.update(k2, spec.B, dt);
      if (!nonlinear) {
        for (std::size_t i = 0; i < uh.size(); ++i) stage[i] = coef.decay[i] * uh[i];
        next = spectral.inverse(stage);
        break;
      }
      if (opts.dt.mode == DtPolicy::Mode::Adaptive) {
        // The heat kernel is a positive contraction, so the nonlinear
        // increment dt phi_1 N is bounded by its k = 0 weight times sup N.
        const double growth = coef.w1[0] * spec.A * std::pow(sup, spec.p);
        if (sup > 0.0 && growth > opts.dt.change_limit * sup) {
          dt *= 0.5;
          ++traj.rejected_steps;
          continue;
        }
      }
      for (std::size_t i = 0; i < uh.size(); ++i) stage[i] = coef.decay[i] * uh[i] + coef.w1[i] * nh[i];
      const auto a = spectral.inverse(stage);
      const auto nah = spectral.forward(nonlinearity(a));
      for (std::size_t i = 0; i < uh.size(); ++i) stage[i] += coef.w2[i] * (nah[i] - nh[i]);
      next = spectral.inverse(stage);
      break;
    }

    double clipped = 0.0;
    for (double& v : next) {
      if (v < 0.0) {
        clipped -= v;
        v = 0.0;
      }
    }
    traj.clipped_mass += clipped * cv;
    const double prev_sup = sup;
    const double prev_t = t;
    u.swap(next);
    t = (T - (t + dt) <= 1e-14 * T) ? T : t + dt;
    sup = detail::sup_abs(u);
    ++traj.steps;
    traj.step_times.push_back(t);
    traj.step_sup.push_back(sup);

    const bool finite = std::isfinite(sup);
    if (!finite || sup > traj.blowup_threshold) {
      traj.blew_up = true;
      // u^{1-p} is affine in t for the ODE u' = A u^p; interpolate there.
      const double e = 1.0 - spec.p;
      const double s0 = std::pow(prev_sup, e);
      const double s1 = finite ? std::pow(sup, e) : 0.0;
      const double sm = std::pow(traj.blowup_threshold, e);
      traj.blowup_time = s0 > s1 ? prev_t + (t - prev_t) * (s0 - sm) / (s0 - s1) : t;
      if (finite) {
        record(t, sup);
        traj.snapshots.push_back({t, ScalarField(geom, u)});
      }
      break;
    }
    const bool last = t >= T;
    if (last || (opts.record_every > 0 && traj.steps % static_cast<std::size_t>(opts.record_every) == 0)) {
      record(t, sup);
      running_ls = std::max(running_ls, traj.rows.back().sup_ls_unit_balls);
    }
    if (last || (opts.snapshot_every > 0 && traj.steps % static_cast<std::size_t>(opts.snapshot_every) == 0)) {
      traj.snapshots.push_back({t, ScalarField(geom, u)});
    }
  }
  if (monitor) {
    traj.delta_running = traj.rows.front().morrey_q_lambda + running_ls;
    traj.delta_exceeded = traj.delta_running > traj.delta_initial * (1.0 + 1e-12);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Integral-inequality checks.

struct SubsolutionReport {
  double max_violation = 0.0;       ///< max_x (u(t) - RHS)_+
  double relative_violation = 0.0;  ///< max_violation / |u(t)|_inf
  double min_margin = 0.0;          ///< min_x (RHS - u(t))
  std::size_t quadrature_nodes = 0;
};

namespace detail {

inline std::size_t find_snapshot(const std::vector<Snapshot>& snaps, double t) {
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (std::abs(snaps[i].t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  }
  throw Error(ErrorKind::TimesNotInTrajectory, "requested time is not a stored snapshot");
}

/// H_{t1-t0} g(t0) + int_{t0}^{t1} H_{t1-s} F(s) ds over stored snapshots,
/// with F interpolated linearly between nodes and integrated exactly against
/// the semigroup.
template <class Forcing, class Start>
std::vector<double> duhamel_rhs(const Spectral& spectral, const std::vector<Snapshot>& snaps, std::size_t i0,
                                std::size_t i1, std::size_t stride, Start start, Forcing forcing,
                                std::size_t& nodes) {
  const auto& k2 = spectral.k_squared();
  std::vector<std::size_t> idx;
  for (std::size_t i = i0; i < i1; i += std::max<std::size_t>(stride, 1)) idx.push_back(i);
  idx.push_back(i1);
  nodes = idx.size();
  auto acc = spectral.forward(start(snaps[i0]));
  auto f_prev = spectral.forward(forcing(snaps[idx.front()]));
  EtdCoefficients coef;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
    const double dt = snaps[idx[j + 1]].t - snaps[idx[j]].t;
    coef.update(k2, 0.0, dt);
    auto f_next = spectral.forward(forcing(snaps[idx[j + 1]]));
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] = coef.decay[i] * acc[i] + (coef.w1[i] - coef.w2[i]) * f_prev[i] + coef.w2[i] * f_next[i];
    }
    f_prev.swap(f_next);
  }
  return spectral.inverse(acc);
}

}  // namespace detail

/// Checks u(t) <= H_{t-t'} u(t') + int_{t'}^t H_{t-s}(A u^p + B u) ds pointwise.
inline SubsolutionReport verify_subsolution(const std::vector<Snapshot>& snaps, double t_start, double t_end,
                                            double A, double B, double p, std::size_t stride = 1) {
  if (snaps.empty()) throw Error(ErrorKind::EmptyTrajectory, "no stored snapshots");
  const std::size_t i0 = detail::find_snapshot(snaps, t_start);
  const std::size_t i1 = detail::find_snapshot(snaps, t_end);
  if (!(i0 < i1)) throw Error(ErrorKind::TimesNotInTrajectory, "need t' < t");
  const Spectral spectral(snaps[i0].u.geom);
  SubsolutionReport rep;
  auto start = [](const Snapshot& s) { return s.u.values; };
  auto forcing = [&](const Snapshot& s) {
    std::vector<double> out(s.u.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double v = std::max(s.u[i], 0.0);
      out[i] = A * std::pow(v, p) + B * v;
    }
    return out;
  };
  const auto rhs = detail::duhamel_rhs(spectral, snaps, i0, i1, stride, start, forcing, rep.quadrature_nodes);
  const auto& lhs = snaps[i1].u;
  rep.min_margin = kInf;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double gap = lhs[i] - rhs[i];
    rep.max_violation = std::max(rep.max_violation, gap);
    rep.min_margin = std::min(rep.min_margin, -gap);
  }
  const double scale = lhs.max_abs();
  rep.relative_violation = scale > 0.0 ? rep.max_violation / scale : 0.0;
  return rep;
}

inline SubsolutionReport verify_subsolution(const Trajectory& traj, double t_start, double t_end,
                                            std::size_t stride = 1) {
  return verify_subsolution(traj.snapshots, t_start, t_end, traj.spec.A, traj.spec.B, traj.spec.p, stride);
}

struct IntegratingFactorReport {
  SubsolutionReport reduced;               ///< v = e^{-tB} u against A e^{pB} int H v^p
  std::vector<double> remainder_sup;       ///< sup_x B^{l+1} I_l(H_{t-.} u(.)), l = 0..5
  std::vector<double> remainder_ratio;     ///< B sup I_{l+1} / sup I_l
  std::vector<double> ratio_bound;         ///< B (t - t') / (l + 1)
  bool ratios_within_bound = true;
};

inline IntegratingFactorReport integrating_factor_check(const Trajectory& traj, double t_start, double t_end,
                                                        int max_order = 5) {
  if (t_end > 1.0 + 1e-12) throw Error(ErrorKind::WindowTooLate, "integrating-factor reduction needs t <= 1");
  const auto& snaps = traj.snapshots;
  if (snaps.empty()) throw Error(ErrorKind::EmptyTrajectory, "no stored snapshots");
  const std::size_t i0 = detail::find_snapshot(snaps, t_start);
  const std::size_t i1 = detail::find_snapshot(snaps, t_end);
  if (!(i0 < i1)) throw Error(ErrorKind::TimesNotInTrajectory, "need t' < t");
  const auto& spec = traj.spec;
  const Spectral spectral(traj.geom);
  IntegratingFactorReport rep;

  const double c37 = spec.A * std::exp(spec.p * spec.B);
  auto start = [&](const Snapshot& s) {
    std::vector<double> v(s.u.values);
    const double w = std::exp(-s.t * spec.B);
    for (double& x : v) x *= w;
    return v;
  };
  auto forcing = [&](const Snapshot& s) {
    std::vector<double> out(s.u.size());
    const double w = std::exp(-s.t * spec.B);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c37 * std::pow(std::max(s.u[i], 0.0) * w, spec.p);
    return out;
  };
  const auto rhs = detail::duhamel_rhs(spectral, snaps, i0, i1, 1, start, forcing, rep.reduced.quadrature_nodes);
  const double w_end = std::exp(-t_end * spec.B);
  rep.reduced.min_margin = kInf;
  double scale = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double v = snaps[i1].u[i] * w_end;
    scale = std::max(scale, std::abs(v));
    rep.reduced.max_violation = std::max(rep.reduced.max_violation, v - rhs[i]);
    rep.reduced.min_margin = std::min(rep.reduced.min_margin, rhs[i] - v);
  }
  rep.reduced.relative_violation = scale > 0.0 ? rep.reduced.max_violation / scale : 0.0;

  // I_l(g) = int_{t'}^t (t - s)^l / l! g(s) ds with g(s) = H_{t-s} u(s), trapezoid in s.
  std::vector<std::vector<double>> g;
  std::vector<double> s_nodes;
  const auto& k2 = spectral.k_squared();
  for (std::size_t j = i0; j <= i1; ++j) {
    auto c = spectral.forward(snaps[j].u.values);
    const double lag = t_end - snaps[j].t;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= std::exp(-k2[i] * lag);
    g.push_back(spectral.inverse(c));
    s_nodes.push_back(snaps[j].t);
  }
  std::vector<double> sup_i;
  double factorial = 1.0;
  for (int l = 0; l <= max_order + 1; ++l) {
    if (l > 0) factorial *= l;
    std::vector<double> acc(g.front().size(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
      double w = 0.0;
      if (j > 0) w += 0.5 * (s_nodes[j] - s_nodes[j - 1]);
      if (j + 1 < g.size()) w += 0.5 * (s_nodes[j + 1] - s_nodes[j]);
      w *= std::pow(t_end - s_nodes[j], l) / factorial;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * g[j][i];
    }
    sup_i.push_back(detail::sup_abs(acc));
  }
  const double span = t_end - t_start;
  for (int l = 0; l <= max_order; ++l) {
    rep.remainder_sup.push_back(std::pow(spec.B, l + 1) * sup_i[l]);
    const double ratio = sup_i[l] > 0.0 ? spec.B * sup_i[l + 1] / sup_i[l] : 0.0;
    const double bound = spec.B * span / (l + 1);
    rep.remainder_ratio.push_back(ratio);
    rep.ratio_bound.push_back(bound);
    if (ratio > bound * (1.0 + 1e-12) + 1e-300) rep.ratios_within_bound = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Decay rates and smallness.

enum class DecayTarget { Critical, Improved };

inline RateFit fit_decay(const Trajectory& traj, double t_begin, double t_end, DecayTarget target) {
  if (!(t_begin > 0.0 && t_begin < t_end)) throw Error(ErrorKind::InvalidArgument, "window must satisfy 0 < t_a < t_b");
  if (traj.blew_up && traj.blowup_time <= t_end) {
    throw Error(ErrorKind::BlowupInWindow, "trajectory blows up inside the fit window");
  }
  const auto& spec = traj.spec;
  RateFit fit;
  fit.t_begin = t_begin;
  fit.t_end = t_end;
  if (target == DecayTarget::Improved) {
    if (!spec.improved) throw Error(ErrorKind::InvalidArgument, "improved target needs (q', lambda')");
    fit.target_exponent = -spec.alpha();
  } else {
    fit.target_exponent = -spec.decay_exponent();
  }
  std::vector<double> ts, vs;
  const double delta = traj.delta_running > 0.0 ? traj.delta_running : traj.delta_initial;
  for (std::size_t i = 0; i < traj.step_times.size(); ++i) {
    const double t = traj.step_times[i];
    if (t < t_begin * (1.0 - 1e-12) || t > t_end * (1.0 + 1e-12)) continue;
    ts.push_back(t);
    vs.push_back(traj.step_sup[i]);
    double c;
    if (target == DecayTarget::Critical) {
      c = delta > 0.0 ? std::min(std::pow(t, spec.decay_exponent()), 1.0) * traj.step_sup[i] / delta : 0.0;
    } else {
      c = std::pow(t, spec.alpha()) * traj.step_sup[i];
    }
    fit.constant_hat = std::max(fit.constant_hat, c);
  }
  if (ts.size() < 2) throw Error(ErrorKind::DegenerateFit, "fewer than two samples in the window");
  bool all_zero = true;
  for (double v : vs) all_zero = all_zero && v == 0.0;
  if (all_zero) {
    fit.fitted_exponent = 0.0;
    return fit;
  }
  const auto line = fit_power_law(ts, vs);
  fit.fitted_exponent = line.slope;
  fit.residual = line.rms_residual;
  return fit;
}

struct SmallnessReport {
  double max_ratio = 0.0;  ///< max_t |u(t)|_{q,lambda} / delta
  double at_time = 0.0;
  double delta = 0.0;
};

inline SmallnessReport morrey_stays_small(const Trajectory& traj) {
  SmallnessReport rep;
  rep.delta = traj.delta_running > 0.0 ? traj.delta_running : traj.delta_initial;
  if (rep.delta == 0.0) return rep;  // zero data: 0/0 reported as 0
  for (const auto& row : traj.rows) {
    const double r = row.morrey_q_lambda / rep.delta;
    if (r > rep.max_ratio) {
      rep.max_ratio = r;
      rep.at_time = row.t;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Closed forms and refinement studies.

/// Solution of u' = A u^p + B u with u(0) = c; +inf at and after blow-up.
inline double constant_solution(const ProblemSpec& spec, double c, double t) {
  if (spec.A == 0.0 || c == 0.0) return c * std::exp(spec.B * t);
  const double e = 1.0 - spec.p;
  double w;  // u^{1-p}
  if (spec.B == 0.0) {
    w = std::pow(c, e) + e * spec.A * t;
  } else {
    const double ratio = spec.A / spec.B;
    w = (std::pow(c, e) + ratio) * std::exp(e * spec.B * t) - ratio;
  }
  return w > 0.0 ? std::pow(w, 1.0 / e) : kInf;
}

struct ConvergenceStudy {
  std::vector<double> dts;
  std::vector<double> errors;  ///< sup-norm distance at T to the reference run
  double reference_dt = 0.0;
  double order = 0.0;          ///< least-squares slope of log error against log dt
};

/// Global temporal order from fixed-step runs against a run with dt / factor.
inline ConvergenceStudy convergence_order(const ScalarField& u0, const ProblemSpec& spec, double T,
                                          std::vector<double> dts, double reference_factor = 8.0) {
  if (dts.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two step sizes");
  std::sort(dts.begin(), dts.end(), std::greater<>());
  ConvergenceStudy out;
  out.dts = dts;
  out.reference_dt = dts.back() / reference_factor;
  auto final_state = [&](double dt) {
    EvolveOptions o;
    o.dt = DtPolicy::fixed(dt);
    o.monitor_morrey = false;
    o.record_every = std::numeric_limits<int>::max();
    auto traj = evolve(u0, spec, T, o);
    if (traj.blew_up) throw Error(ErrorKind::BlowupInWindow, "convergence study run blew up before T");
    return traj.snapshots.back().u.values;
  };
  const auto ref = final_state(out.reference_dt);
  for (double dt : dts) {
    const auto u = final_state(dt);
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) e = std::max(e, std::abs(u[i] - ref[i]));
    out.errors.push_back(e);
  }
  out.order = fit_power_law(out.dts, out.errors).slope;
  return out;
}

/// Outcome of comparing a violation at (h, dt) with the one at (h/2, dt/2).
struct RefinementVerdict {
  double coarse = 0.0;
  double fine = 0.0;
  double order = 0.0;  ///< log2(coarse / fine); +inf when fine vanishes
  bool below_floor = false;
  bool pass = false;
};

inline RefinementVerdict refinement_verdict(double coarse, double fine, double floor, double min_order = 1.0) {
  RefinementVerdict v;
  v.coarse = coarse;
  v.fine = fine;
  v.below_floor = coarse <= floor && fine <= floor;
  if (fine > 0.0 && coarse > 0.0) {
    v.order = std::log2(coarse / fine);
  } else if (fine == 0.0 && coarse > 0.0) {
    v.order = kInf;
  } else {
    v.order = std::numeric_limits<double>::quiet_NaN();
  }
  v.pass = v.below_floor || v.order >= min_order;
  return v;
}

// ---------------------------------------------------------------------------
// Blow-up.

struct BlowupDetection {
  bool detected = false;
  double time = std::numeric_limits<double>::quiet_NaN();
  double threshold = kInf;
};

inline BlowupDetection detect_blowup(const Trajectory& traj) {
  BlowupDetection out;
  out.threshold = traj.blowup_threshold;
  out.detected = traj.blew_up;
  out.time = traj.blowup_time;
  return out;
}

/// First crossing of `level` by |u|_inf, interpolated in u^{1-p}.
inline std::optional<double> crossing_time(const Trajectory& traj, double level) {
  const double e = 1.0 - traj.spec.p;
  for (std::size_t i = 1; i < traj.step_sup.size(); ++i) {
    if (traj.step_sup[i] > level || !std::isfinite(traj.step_sup[i])) {
      const double s0 = std::pow(traj.step_sup[i - 1], e);
      const double s1 = std::isfinite(traj.step_sup[i]) ? std::pow(traj.step_sup[i], e) : 0.0;
      const double sm = std::pow(level, e);
      const double t0 = traj.step_times[i - 1], t1 = traj.step_times[i];
      return s0 > s1 ? t0 + (t1 - t0) * (s0 - sm) / (s0 - s1) : t1;
    }
  }
  return std::nullopt;
}

struct BlowupRecord {
  double c = 0.0;
  bool detected = false;
  double time_at_threshold = std::numeric_limits<double>::quiet_NaN();
  double time_at_double = std::numeric_limits<double>::quiet_NaN();
  double extrapolated = std::numeric_limits<double>::quiet_NaN();
  double analytic = std::numeric_limits<double>::quiet_NaN();  ///< c^{1-p}/(A(p-1)) when B = 0
  double threshold_shift = std::numeric_limits<double>::quiet_NaN();  ///< |T(2M) - T(M)| / T(M)
};

/// Blow-up times of constant data u0 = c for each c, with threshold M and 2M
/// and the Richardson estimate T* ~ (2^{p-1} T(2M) - T(M)) / (2^{p-1} - 1).
inline std::vector<BlowupRecord> blowup_study(const TorusGeometry& geom, const ProblemSpec& spec,
                                              const std::vector<double>& c_grid, double horizon,
                                              double threshold_factor = 1e6, EvolveOptions opts = {}) {
  std::vector<BlowupRecord> out;
  for (double c : c_grid) {
    BlowupRecord rec;
    rec.c = c;
    const double level = threshold_factor * c;
    if (!(level > 10.0 * c)) throw Error(ErrorKind::InvalidArgument, "threshold must exceed 10 |u0|_inf");
    opts.blowup_threshold = 2.0 * level;
    opts.monitor_morrey = false;
    const auto traj = evolve(profiles::constant(geom, c), spec, horizon, opts);
    rec.detected = traj.blew_up;
    if (traj.blew_up) {
      rec.time_at_double = traj.blowup_time;
      rec.time_at_threshold = crossing_time(traj, level).value_or(traj.blowup_time);
      const double g = std::pow(2.0, spec.p - 1.0);
      rec.extrapolated = (g * rec.time_at_double - rec.time_at_threshold) / (g - 1.0);
      rec.threshold_shift = std::abs(rec.time_at_double - rec.time_at_threshold) / rec.time_at_threshold;
    }
    if (spec.B == 0.0 && spec.A > 0.0) rec.analytic = std::pow(c, 1.0 - spec.p) / (spec.A * (spec.p - 1.0));
    out.push_back(rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initial layer.

struct InitialLayerReport {
  std::size_t samples = 0;
  double sup_product_slope = 0.0;     ///< d log(t^{1/(p-1)} |u|_inf) / d log t
  double morrey_product_slope = 0.0;  ///< d log(t^beta |u|_{r,lambda}) / d log t
  bool sup_product_vanishes = false;
  bool morrey_product_vanishes = false;
};

/// Checks that t^{1/(p-1)} |u|_inf and t^beta |u|_{r,lambda} tend to zero as
/// t decreases, by their log-log trend over the recorded rows in (0, t_max].
inline InitialLayerReport initial_layer_check(const Trajectory& traj, double t_max = 0.01,
                                              double trend_tolerance = 0.05) {
  const auto& spec = traj.spec;
  std::vector<double> ts, sp, mp;
  for (const auto& row : traj.rows) {
    if (row.t > 0.0 && row.t <= t_max * (1.0 + 1e-12)) {
      ts.push_back(row.t);
      sp.push_back(std::pow(row.t, spec.decay_exponent()) * row.sup_norm);
      mp.push_back(std::pow(row.t, spec.beta()) * row.morrey_r_lambda);
    }
  }
  if (ts.size() < 10) throw Error(ErrorKind::InsufficientEarlySamples, "need at least 10 recorded times in (0, t_max]");
  InitialLayerReport rep;
  rep.samples = ts.size();
  auto judge = [&](const std::vector<double>& v, double& slope) {
    const bool all_zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    if (all_zero) {
      slope = 0.0;
      return true;
    }
    slope = fit_power_law(ts, v).slope;
    return slope > trend_tolerance;
  };
  rep.sup_product_vanishes = judge(sp, rep.sup_product_slope);
  rep.morrey_product_vanishes = judge(mp, rep.morrey_product_slope);
  return rep;
}

// ---------------------------------------------------------------------------
// Export.

inline void write_csv(const Trajectory& traj, std::ostream& os) {
  os << "t,sup_norm,morrey_q_lambda,morrey_r_lambda,sup_Ls_unit_balls,clipped_mass\n";
  char buf[256];
  for (const auto& r : traj.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.sup_norm, r.morrey_q_lambda,
                  r.morrey_r_lambda, r.sup_ls_unit_balls, r.clipped_mass);
    os << buf;
  }
}

}  // namespace morreylab
