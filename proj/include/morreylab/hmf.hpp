#pragma once

// Harmonic map flow from the flat torus into the unit sphere S^{k-1} in R^k:
//   w_t = Lap w + |grad w|^2 w.
// Direct evolution (ambient exponential step followed by projection), Wang's
// fixed-point iteration, the X_T norm, and the diagnostics built on them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

#include <json.hpp>

#include "morreylab/field.hpp"
#include "morreylab/fit.hpp"
#include "morreylab/morrey.hpp"
#include "morreylab/profiles.hpp"
#include "morreylab/semilinear.hpp"
#include "morreylab/spectral.hpp"

namespace morreylab {

/// R^k-valued field stored component-wise.
struct MapField {
  TorusGeometry geom;
  std::vector<std::vector<double>> comp;

  MapField(const TorusGeometry& g, int k) : geom(g), comp(static_cast<std::size_t>(k), std::vector<double>(g.size())) {
    if (k < 2) throw Error(ErrorKind::InvalidArgument, "target dimension k must be >= 2");
  }

  int k() const noexcept { return static_cast<int>(comp.size()); }
  std::size_t size() const noexcept { return geom.size(); }

  double norm_at(std::size_t i) const {
    double s = 0.0;
    for (const auto& c : comp) s += c[i] * c[i];
    return std::sqrt(s);
  }

  /// max_i | |w_i| - 1 |
  double sphere_deviation() const {
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i) d = std::max(d, std::abs(norm_at(i) - 1.0));
    return d;
  }

  double sup_norm() const {
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i) d = std::max(d, norm_at(i));
    return d;
  }
};

inline MapField operator-(const MapField& a, const MapField& b) {
  MapField out(a.geom, a.k());
  for (int c = 0; c < a.k(); ++c) {
    for (std::size_t i = 0; i < a.size(); ++i) out.comp[c][i] = a.comp[c][i] - b.comp[c][i];
  }
  return out;
}

/// Nearest-point projection w / |w|.
inline MapField project_to_sphere(MapField w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = w.norm_at(i);
    if (!(r >= 0.5)) {
      throw Error(ErrorKind::OutsideTubularNeighborhood, "ambient value left the tubular neighbourhood |w| >= 1/2");
    }
    for (auto& c : w.comp) c[i] /= r;
  }
  return w;
}

namespace detail {

/// |grad w|^2 at every grid point from spectral coefficients of the components.
inline std::vector<double> gradient_energy_density(const Spectral& spectral,
                                                   const std::vector<std::vector<Complex>>& coeffs) {
  const int n = spectral.geometry().dim();
  std::vector<double> e(spectral.real_size(), 0.0);
  for (const auto& c : coeffs) {
    for (int a = 0; a < n; ++a) {
      const auto d = spectral.derivative(c, a);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += d[i] * d[i];
    }
  }
  return e;
}

inline std::vector<std::vector<Complex>> transform(const Spectral& spectral, const MapField& w) {
  std::vector<std::vector<Complex>> out;
  out.reserve(w.comp.size());
  for (const auto& c : w.comp) out.push_back(spectral.forward(c));
  return out;
}

}  // namespace detail

/// |grad w| as a scalar field.
inline ScalarField energy_density(const MapField& w) {
  const Spectral spectral(w.geom);
  auto e = detail::gradient_energy_density(spectral, detail::transform(spectral, w));
  for (double& v : e) v = std::sqrt(v);
  return ScalarField(w.geom, std::move(e));
}

/// Lap w + |grad w|^2 w, the tension field for the sphere target.
inline MapField hmf_rhs(const MapField& w) {
  const Spectral spectral(w.geom);
  const auto coeffs = detail::transform(spectral, w);
  const auto e = detail::gradient_energy_density(spectral, coeffs);
  const auto& k2 = spectral.k_squared();
  MapField out(w.geom, w.k());
  for (int c = 0; c < w.k(); ++c) {
    std::vector<Complex> lap(coeffs[c]);
    for (std::size_t i = 0; i < lap.size(); ++i) lap[i] *= -k2[i];
    out.comp[c] = spectral.inverse(lap);
    for (std::size_t i = 0; i < w.size(); ++i) out.comp[c][i] += e[i] * w.comp[c][i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference maps.

namespace maps {

inline MapField constant_map(const TorusGeometry& geom, int k, int axis = -1) {
  MapField w(geom, k);
  std::fill(w.comp[axis < 0 ? k - 1 : axis].begin(), w.comp[axis < 0 ? k - 1 : axis].end(), 1.0);
  return w;
}

/// (cos theta, sin theta) with theta = 2 pi m x_0 / L: a closed geodesic of
/// winding m, harmonic as a map into S^1.
inline MapField winding_map(const TorusGeometry& geom, int m) {
  MapField w(geom, 2);
  const double base = 2.0 * std::numbers::pi * m / geom.period();
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const double theta = base * geom.position(i)[0];
    w.comp[0][i] = std::cos(theta);
    w.comp[1][i] = std::sin(theta);
  }
  return w;
}

/// North pole tilted towards e_1 by amplitude * bump(|x|, width), projected.
inline MapField bump_map(const TorusGeometry& geom, int k, double amplitude, double width) {
  MapField w = constant_map(geom, k);
  for (std::size_t i = 0; i < geom.size(); ++i) {
    w.comp[0][i] += amplitude * profiles::bump(geom.distance_to_origin(i), width);
  }
  return project_to_sphere(std::move(w));
}

/// North pole plus a random combination of the lowest Fourier modes in every
/// component, projected. Deterministic for a given seed.
inline MapField random_small_map(const TorusGeometry& geom, int k, double amplitude, int max_mode,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  MapField w = constant_map(geom, k);
  const double base = 2.0 * std::numbers::pi / geom.period();
  const int n = geom.dim();
  const int kmax = n == 3 ? max_mode : 0;
  for (int c = 0; c < k; ++c) {
    for (int a = -max_mode; a <= max_mode; ++a) {
      for (int b = -max_mode; b <= max_mode; ++b) {
        for (int d = -kmax; d <= kmax; ++d) {
          if (a == 0 && b == 0 && d == 0) continue;
          const double cc = amplitude * coef(rng);
          const double ss = amplitude * coef(rng);
          for (std::size_t i = 0; i < geom.size(); ++i) {
            const auto x = geom.position(i);
            const double ph = base * (a * x[0] + b * x[1] + (n == 3 ? d * x[2] : 0.0));
            w.comp[c][i] += cc * std::cos(ph) + ss * std::sin(ph);
          }
        }
      }
    }
  }
  return project_to_sphere(std::move(w));
}

/// Rotation about the axis e_i ^ e_j by angle theta, applied pointwise.
inline MapField rotate(MapField w, int i, int j, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t p = 0; p < w.size(); ++p) {
    const double a = w.comp[i][p], b = w.comp[j][p];
    w.comp[i][p] = c * a - s * b;
    w.comp[j][p] = s * a + c * b;
  }
  return w;
}

}  // namespace maps

// ---------------------------------------------------------------------------
// Direct flow.

struct HmfRow {
  double t = 0.0;
  double energy = 0.0;      ///< int |grad w|^2
  double sup_grad = 0.0;    ///< max |grad w|
  double morrey_2_2 = 0.0;  ///< |grad w| in M^{2,2}
  double tension_sq = 0.0;  ///< int |tau(w)|^2
};

struct MapSnapshot {
  double t = 0.0;
  MapField w;
};

struct HmfOptions {
  DtPolicy dt;  ///< adaptive: dt = safety * min(h^2, 1 / max|grad w|^2)
  int record_every = 1;
  int snapshot_every = 0;  ///< 0 keeps first and last only
  std::size_t max_steps = 20'000'000;
};

struct HmfTrajectory {
  HmfTrajectory(const TorusGeometry& g, int components) : geom(g), k(components) {}

  TorusGeometry geom;
  int k = 3;
  std::vector<HmfRow> rows;
  std::vector<MapSnapshot> snapshots;
  double max_sphere_deviation = 0.0;
  std::size_t steps = 0;

  const MapField& final_map() const { return snapshots.back().w; }
};

class HmfDiagnostics {
 public:
  explicit HmfDiagnostics(const TorusGeometry& geom) : spectral_(geom), morrey_(geom, CenterSet::AllGridPoints) {}

  HmfRow measure(const MapField& w, double t) const {
    const auto coeffs = detail::transform(spectral_, w);
    const auto e = detail::gradient_energy_density(spectral_, coeffs);
    const auto& k2 = spectral_.k_squared();
    const double cv = w.geom.cell_volume();
    HmfRow row;
    row.t = t;
    std::vector<double> grad(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      row.energy += e[i] * cv;
      grad[i] = std::sqrt(e[i]);
      row.sup_grad = std::max(row.sup_grad, grad[i]);
    }
    row.morrey_2_2 = morrey_.norm(grad, {2.0, 2.0});
    std::vector<double> tau2(e.size(), 0.0);
    for (int c = 0; c < w.k(); ++c) {
      std::vector<Complex> lap(coeffs[c]);
      for (std::size_t i = 0; i < lap.size(); ++i) lap[i] *= -k2[i];
      const auto l = spectral_.inverse(lap);
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double tc = l[i] + e[i] * w.comp[c][i];
        tau2[i] += tc * tc;
      }
    }
    for (double v : tau2) row.tension_sq += v * cv;
    return row;
  }

 private:
  Spectral spectral_;
  MorreyEvaluator morrey_;
};

inline HmfTrajectory evolve_hmf(const MapField& w0, double T, const HmfOptions& opts = {}) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "final time must be positive");
  if (w0.sphere_deviation() > 1e-8) throw Error(ErrorKind::InvalidArgument, "initial map must lie on the sphere");
  const TorusGeometry& geom = w0.geom;
  const Spectral spectral(geom);
  const HmfDiagnostics diag(geom);
  const auto& k2 = spectral.k_squared();
  const double h2 = geom.spacing() * geom.spacing();
  const int k = w0.k();

  HmfTrajectory traj{geom, k};
  MapField w = w0;
  double t = 0.0;
  traj.rows.push_back(diag.measure(w, 0.0));
  traj.snapshots.push_back({0.0, w});

  detail::EtdCoefficients coef;
  auto forcing = [&](const MapField& m, const std::vector<std::vector<Complex>>& mh, double& sup_e) {
    const auto e = detail::gradient_energy_density(spectral, mh);
    sup_e = *std::max_element(e.begin(), e.end());
    std::vector<std::vector<Complex>> out;
    std::vector<double> f(m.size());
    for (int c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = e[i] * m.comp[c][i];
      out.push_back(spectral.forward(f));
    }
    return out;
  };

  while (t < T * (1.0 - 1e-14)) {
    if (traj.steps >= opts.max_steps) throw Error(ErrorKind::StepCollapse, "step budget exhausted before T");
    const auto wh = detail::transform(spectral, w);
    double sup_e = 0.0;
    const auto nh = forcing(w, wh, sup_e);
    double dt;
    if (opts.dt.mode == DtPolicy::Mode::Fixed) {
      dt = opts.dt.dt;
    } else {
      dt = opts.dt.safety * (sup_e > 0.0 ? std::min(h2, 1.0 / sup_e) : h2);
      dt = std::min(dt, opts.dt.dt_max);
    }
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "time step must be positive");
    dt = std::min(dt, T - t);
    if (t + dt == t) throw Error(ErrorKind::StepCollapse, "time step underflow before reaching T");
    coef.update(k2, 0.0, dt);

    MapField a(geom, k);
    std::vector<std::vector<Complex>> stage(k);
    for (int c = 0; c < k; ++c) {
      stage[c].resize(wh[c].size());
      for (std::size_t i = 0; i < stage[c].size(); ++i) stage[c][i] = coef.decay[i] * wh[c][i] + coef.w1[i] * nh[c][i];
      a.comp[c] = spectral.inverse(stage[c]);
    }
    double unused = 0.0;
    const auto nah = forcing(a, stage, unused);
    MapField next(geom, k);
    for (int c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < stage[c].size(); ++i) stage[c][i] += coef.w2[i] * (nah[c][i] - nh[c][i]);
      next.comp[c] = spectral.inverse(stage[c]);
    }
    w = project_to_sphere(std::move(next));
    traj.max_sphere_deviation = std::max(traj.max_sphere_deviation, w.sphere_deviation());
    t = (T - (t + dt) <= 1e-14 * T) ? T : t + dt;
    ++traj.steps;

    const bool last = t >= T;
    if (last || (opts.record_every > 0 && traj.steps % static_cast<std::size_t>(opts.record_every) == 0)) {
      traj.rows.push_back(diag.measure(w, t));
    }
    if (last || (opts.snapshot_every > 0 && traj.steps % static_cast<std::size_t>(opts.snapshot_every) == 0)) {
      traj.snapshots.push_back({t, w});
    }
  }
  return traj;
}

inline void write_csv(const HmfTrajectory& traj, std::ostream& os) {
  os << "t,energy,sup_grad,morrey_2_2,tension_sq\n";
  char buf[256];
  for (const auto& r : traj.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy, r.sup_grad, r.morrey_2_2,
                  r.tension_sq);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// X_T norm and Wang's iteration.

struct XtNorm {
  double sup_sup = 0.0;          ///< sup_t |f(t)|_inf
  double sup_sqrt_t_grad = 0.0;  ///< sup_t sqrt(t) |grad f(t)|_inf
  double parabolic_morrey = 0.0; ///< sup_{x, R <= sqrt T} (R^{-n} int_0^{R^2} int_{B_R(x)} |grad f|^2)^{1/2}
  double total() const { return sup_sup + sup_sqrt_t_grad + parabolic_morrey; }
};

inline nlohmann::json to_json(const XtNorm& x) {
  return {{"sup_sup", x.sup_sup},
          {"sup_sqrt_t_grad", x.sup_sqrt_t_grad},
          {"parabolic_morrey", x.parabolic_morrey},
          {"total", x.total()}};
}

namespace detail {

/// int_{t_a}^{t_a + theta (t_b - t_a)} g with g interpolated geometrically
/// between g_a and g_b; trapezoid when either sample vanishes.
inline double log_linear_segment(double ga, double gb, double span, double theta) {
  if (ga <= 0.0 || gb <= 0.0) {
    const double g_end = ga + theta * (gb - ga);
    return 0.5 * theta * span * (ga + g_end);
  }
  const double lr = std::log(gb / ga);
  if (std::abs(lr) < 1e-10) return theta * span * ga * (1.0 + 0.5 * theta * lr);
  return span * ga * std::expm1(theta * lr) / lr;
}

}  // namespace detail

/// X_T norm of a trajectory sampled at increasing times in [0, T].
inline XtNorm xt_norm(const std::vector<MapSnapshot>& traj, double T) {
  if (traj.empty()) throw Error(ErrorKind::EmptyTrajectory, "no samples");
  const TorusGeometry& geom = traj.front().w.geom;
  const Spectral spectral(geom);
  const int n = geom.dim();
  std::vector<double> radii;
  for (double r : dyadic_radii(geom)) {
    if (r * r <= T * (1.0 + 1e-12)) radii.push_back(r);
  }
  XtNorm out;
  std::vector<std::vector<double>> density;  // |grad f|^2 per sample
  std::vector<double> times;
  for (const auto& s : traj) {
    if (s.t > T * (1.0 + 1e-12)) break;
    out.sup_sup = std::max(out.sup_sup, s.w.sup_norm());
    auto e = detail::gradient_energy_density(spectral, detail::transform(spectral, s.w));
    const double sup_e = *std::max_element(e.begin(), e.end());
    out.sup_sqrt_t_grad = std::max(out.sup_sqrt_t_grad, std::sqrt(s.t * sup_e));
    density.push_back(std::move(e));
    times.push_back(s.t);
  }
  if (radii.empty() || times.size() < 2) return out;
  const MorreyEvaluator eval(geom, radii, CenterSet::AllGridPoints);
  std::vector<std::vector<Complex>> density_hat;
  for (const auto& e : density) density_hat.push_back(spectral.forward(e));
  double best = 0.0;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    const double horizon = radii[r] * radii[r];
    std::vector<double> acc(geom.size(), 0.0);
    auto prev = eval.ball_integrals_from(density_hat[0], r);
    for (std::size_t j = 0; j + 1 < times.size() && times[j] < horizon; ++j) {
      auto next = eval.ball_integrals_from(density_hat[j + 1], r);
      const double span = times[j + 1] - times[j];
      const double theta = std::min(1.0, (horizon - times[j]) / span);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += detail::log_linear_segment(prev[i], next[i], span, theta);
      prev.swap(next);
    }
    const double weight = std::pow(radii[r], -n);
    for (double v : acc) best = std::max(best, weight * v);
  }
  out.parabolic_morrey = std::sqrt(best);
  return out;
}

struct WangIterateRecord {
  XtNorm iterate;     ///< X_T norm of w_j
  XtNorm difference;  ///< X_T norm of w_{j+1} - w_j (the fixed-point residual)
  double ratio = 0.0; ///< difference.total() / previous difference.total()
};

struct WangReport {
  double T = 0.0;
  std::size_t time_steps = 0;
  std::vector<WangIterateRecord> iterates;
  double final_sphere_deviation = 0.0;  ///< max | |w_n(T)| - 1 |
  std::vector<MapSnapshot> final_iterate;
};

inline nlohmann::json to_json(const WangReport& r) {
  nlohmann::json its = nlohmann::json::array();
  for (std::size_t j = 0; j < r.iterates.size(); ++j) {
    its.push_back({{"iterate", j + 1},
                   {"xt_norm", to_json(r.iterates[j].iterate)},
                   {"difference", to_json(r.iterates[j].difference)},
                   {"ratio", r.iterates[j].ratio}});
  }
  return {{"T", r.T},
          {"time_steps", r.time_steps},
          {"iterates", its},
          {"final_sphere_deviation", r.final_sphere_deviation}};
}

/// Picard iteration w_1(t) = H_t w0, w_{j+1} = Phi(w_j) with
/// Phi(f)(t) = H_t w0 + int_0^t H_{t-s}(|grad f|^2 f)(s) ds on a uniform grid
/// of `time_steps` intervals; the integral is exact against the semigroup for
/// forcing linear in s on each interval.
inline WangReport wang_iterate(const MapField& w0, double T, int n_iters, std::size_t time_steps = 200) {
  if (!(T > 0.0 && T <= 1.0 + 1e-12)) throw Error(ErrorKind::InvalidArgument, "Wang iteration needs 0 < T <= 1");
  if (n_iters < 1 || time_steps < 1) throw Error(ErrorKind::InvalidArgument, "need at least one iterate and step");
  const TorusGeometry& geom = w0.geom;
  const Spectral spectral(geom);
  const auto& k2 = spectral.k_squared();
  const int k = w0.k();
  const double dt = T / static_cast<double>(time_steps);
  detail::EtdCoefficients coef;
  coef.update(k2, 0.0, dt);
  const auto w0h = detail::transform(spectral, w0);

  auto sample_time = [&](std::size_t j) { return j == time_steps ? T : dt * static_cast<double>(j); };

  // w_1(t) = H_t w0.
  std::vector<MapSnapshot> current;
  {
    auto acc = w0h;
    for (std::size_t j = 0; j <= time_steps; ++j) {
      MapField f(geom, k);
      for (int c = 0; c < k; ++c) f.comp[c] = spectral.inverse(acc[c]);
      current.push_back({sample_time(j), std::move(f)});
      for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < acc[c].size(); ++i) acc[c][i] *= coef.decay[i];
      }
    }
  }

  auto forcing_hat = [&](const MapField& f) {
    const auto fh = detail::transform(spectral, f);
    const auto e = detail::gradient_energy_density(spectral, fh);
    std::vector<std::vector<Complex>> out;
    std::vector<double> g(f.size());
    for (int c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = e[i] * f.comp[c][i];
      out.push_back(spectral.forward(g));
    }
    return out;
  };

  auto phi = [&](const std::vector<MapSnapshot>& f) {
    std::vector<MapSnapshot> out;
    auto acc = w0h;
    auto f_prev = forcing_hat(f[0].w);
    out.push_back({0.0, w0});
    for (std::size_t j = 0; j < time_steps; ++j) {
      auto f_next = forcing_hat(f[j + 1].w);
      MapField g(geom, k);
      for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < acc[c].size(); ++i) {
          acc[c][i] = coef.decay[i] * acc[c][i] + (coef.w1[i] - coef.w2[i]) * f_prev[c][i] + coef.w2[i] * f_next[c][i];
        }
        g.comp[c] = spectral.inverse(acc[c]);
      }
      out.push_back({sample_time(j + 1), std::move(g)});
      f_prev.swap(f_next);
    }
    return out;
  };

  WangReport rep;
  rep.T = T;
  rep.time_steps = time_steps;
  for (int it = 0; it < n_iters; ++it) {
    auto next = phi(current);
    WangIterateRecord rec;
    rec.iterate = xt_norm(current, T);
    std::vector<MapSnapshot> diff;
    diff.reserve(next.size());
    for (std::size_t j = 0; j < next.size(); ++j) diff.push_back({next[j].t, next[j].w - current[j].w});
    rec.difference = xt_norm(diff, T);
    if (!rep.iterates.empty()) {
      const double prev = rep.iterates.back().difference.total();
      rec.ratio = prev > 0.0 ? rec.difference.total() / prev : 0.0;
    }
    rep.iterates.push_back(rec);
    const std::size_t m = rep.iterates.size();
    if (m >= 4) {
      const double old = rep.iterates[m - 4].difference.total();
      if (!std::isfinite(rec.difference.total()) || rec.difference.total() > 10.0 * old) {
        throw Error(ErrorKind::IterationDiverged, "X_T difference grew tenfold over three iterates");
      }
    }
    current = std::move(next);
  }
  rep.final_sphere_deviation = current.back().w.sphere_deviation();
  rep.final_iterate = std::move(current);
  return rep;
}

// ---------------------------------------------------------------------------
// Energy-density subsolution, mollification, convergence.

/// Feeds u = |grad w| from the stored snapshots into the integral inequality
/// with p = 3.
inline SubsolutionReport bochner_subsolution_check(const HmfTrajectory& traj, double t_start, double t_end,
                                                   double A = 1.0, double B = 0.0) {
  std::vector<Snapshot> snaps;
  snaps.reserve(traj.snapshots.size());
  for (const auto& s : traj.snapshots) snaps.push_back({s.t, energy_density(s.w)});
  return verify_subsolution(snaps, t_start, t_end, A, B, 3.0);
}

/// Periodic convolution with the normalized bump exp(-1/(1 - (r/lambda)^2))
/// followed by projection onto the sphere.
inline MapField mollify_map(const MapField& w, double lambda_moll) {
  const TorusGeometry& geom = w.geom;
  const double h = geom.spacing();
  if (!(lambda_moll >= 2.0 * h * (1.0 - 1e-12) && lambda_moll <= 0.25 * (1.0 + 1e-12))) {
    throw Error(ErrorKind::InvalidArgument, "mollifier radius must lie in [2h, 1/4]");
  }
  const Spectral spectral(geom);
  std::vector<double> kernel(geom.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const double s = geom.distance_to_origin(i) / lambda_moll;
    if (s < 1.0) {
      kernel[i] = std::exp(-1.0 / (1.0 - s * s));
      mass += kernel[i];
    }
  }
  for (double& v : kernel) v /= mass;
  const auto kh = spectral.forward(kernel);
  MapField out(geom, w.k());
  for (int c = 0; c < w.k(); ++c) {
    auto ch = spectral.forward(w.comp[c]);
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] *= kh[i];
    out.comp[c] = spectral.inverse(ch);
  }
  return project_to_sphere(std::move(out));
}

struct MollificationEntry {
  double lambda_moll = 0.0;
  double ratio = 1.0;         ///< |grad w_lambda|_{2,2} / |grad w|_{2,2}, 0/0 := 1
  double sup_distance = 0.0;  ///< |w_lambda - w|_inf
};

struct MorreyControlReport {
  std::vector<MollificationEntry> entries;
  double max_ratio = 1.0;
  bool distances_decrease = true;  ///< sup_distance shrinks as lambda shrinks
};

inline MorreyControlReport morrey_control_check(const MapField& w, std::vector<double> lambda_grid) {
  if (lambda_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty mollifier grid");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  const MorreyEvaluator eval(w.geom, CenterSet::AllGridPoints);
  const double base = eval.norm(energy_density(w), {2.0, 2.0});
  MorreyControlReport rep;
  rep.max_ratio = 0.0;
  for (double lam : lambda_grid) {
    MollificationEntry e;
    e.lambda_moll = lam;
    const MapField m = mollify_map(w, lam);
    const double v = eval.norm(energy_density(m), {2.0, 2.0});
    e.ratio = base > 0.0 ? v / base : 1.0;
    e.sup_distance = (m - w).sup_norm();
    rep.max_ratio = std::max(rep.max_ratio, e.ratio);
    rep.entries.push_back(e);
  }
  for (std::size_t i = 1; i < rep.entries.size(); ++i) {
    if (rep.entries[i].sup_distance < rep.entries[i - 1].sup_distance * (1.0 - 1e-12)) {
      rep.distances_decrease = false;
    }
  }
  return rep;
}

struct ConvergenceReport {
  bool is_converged = false;
  bool stationary = false;  ///< energy identically zero
  std::vector<double> limit_point;
  double sup_distance = 0.0;  ///< max_x |w(T, x) - limit_point|
  double fitted_rate = 0.0;   ///< -d log E / dt over the last half of the run
  double early_rate = 0.0;    ///< same over the third quarter
  double late_rate = 0.0;     ///< same over the last quarter
  double final_energy = 0.0;
};

inline ConvergenceReport convergence_to_constant(const HmfTrajectory& traj, double tol = 1e-3) {
  if (traj.rows.empty() || traj.snapshots.empty()) throw Error(ErrorKind::EmptyTrajectory, "no samples");
  ConvergenceReport rep;
  const MapField& w = traj.final_map();
  rep.limit_point.assign(static_cast<std::size_t>(w.k()), 0.0);
  for (int c = 0; c < w.k(); ++c) {
    double s = 0.0;
    for (double v : w.comp[c]) s += v;
    rep.limit_point[c] = s / static_cast<double>(w.size());
  }
  double len = 0.0;
  for (double v : rep.limit_point) len += v * v;
  len = std::sqrt(len);
  if (len > 0.0) {
    for (double& v : rep.limit_point) v /= len;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    double d = 0.0;
    for (int c = 0; c < w.k(); ++c) d += (w.comp[c][i] - rep.limit_point[c]) * (w.comp[c][i] - rep.limit_point[c]);
    rep.sup_distance = std::max(rep.sup_distance, std::sqrt(d));
  }
  rep.final_energy = traj.rows.back().energy;
  const bool zero_energy =
      std::all_of(traj.rows.begin(), traj.rows.end(), [](const HmfRow& r) { return r.energy == 0.0; });
  if (zero_energy) {
    rep.stationary = true;
    rep.is_converged = rep.sup_distance < tol;
    return rep;
  }
  const double t_end = traj.rows.back().t;
  auto rate_over = [&](double a, double b) {
    std::vector<double> ts, es;
    for (const auto& r : traj.rows) {
      if (r.t >= a && r.t <= b && r.energy > 0.0) {
        ts.push_back(r.t);
        es.push_back(std::log(r.energy));
      }
    }
    if (ts.size() < 2) return 0.0;
    return -fit_line(ts, es).slope;
  };
  rep.fitted_rate = rate_over(0.5 * t_end, t_end);
  rep.early_rate = rate_over(0.5 * t_end, 0.75 * t_end);
  rep.late_rate = rate_over(0.75 * t_end, t_end);
  const bool stable = rep.late_rate > 0.0 && std::abs(rep.early_rate - rep.late_rate) <= 0.25 * rep.late_rate;
  rep.is_converged = rep.sup_distance < tol && rep.fitted_rate > 0.0 && stable;
  return rep;
}

/// Smallest nonzero eigenvalue of -Lap on the torus times two: the decay rate
/// of the energy of the linearized flow.
inline double linearized_energy_rate(const TorusGeometry& geom) {
  const double k = 2.0 * std::numbers::pi / geom.period();
  return 2.0 * k * k;
}

/// Dirichlet energy of the winding-m geodesic, 4 pi^2 m^2 L^{n-2}.
inline double winding_energy(const TorusGeometry& geom, int m) {
  return 4.0 * std::numbers::pi * std::numbers::pi * m * m * std::pow(geom.period(), geom.dim() - 2);
}

}  // namespace morreylab
