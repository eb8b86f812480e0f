#pragma once

// Heat semigroup on the flat torus: the exact Fourier multiplier exp(-|k|^2 t)
// for fields, and the periodized Gaussian image sum for pointwise values.

#include <cmath>
#include <numbers>
#include <vector>

#include "morreylab/field.hpp"
#include "morreylab/fit.hpp"
#include "morreylab/morrey.hpp"
#include "morreylab/spectral.hpp"

namespace morreylab {

class HeatSemigroup {
 public:
  explicit HeatSemigroup(const TorusGeometry& geom) : spectral_(geom) {}

  const TorusGeometry& geometry() const noexcept { return spectral_.geometry(); }
  const Spectral& spectral() const noexcept { return spectral_; }

  /// Multiplier exp(-|k|^2 t) per spectral coefficient.
  std::vector<double> multiplier(double t) const {
    check_time(t);
    const auto& k2 = spectral_.k_squared();
    std::vector<double> m(k2.size());
    for (std::size_t i = 0; i < k2.size(); ++i) m[i] = std::exp(-k2[i] * t);
    return m;
  }

  std::vector<Complex> propagate_coefficients(std::vector<Complex> coeffs, double t) const {
    const auto m = multiplier(t);
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= m[i];
    return coeffs;
  }

  ScalarField propagate(const ScalarField& f, double t) const {
    check_time(t);
    if (t == 0.0) return f;
    auto c = propagate_coefficients(spectral_.forward(f.view()), t);
    return ScalarField(f.geom, spectral_.inverse(c));
  }

  /// Components of grad H_t f (multiplier i k exp(-|k|^2 t)).
  std::vector<ScalarField> gradient_propagate(const ScalarField& f, double t) const {
    check_time(t);
    auto c = propagate_coefficients(spectral_.forward(f.view()), t);
    std::vector<ScalarField> grad;
    for (int a = 0; a < f.geom.dim(); ++a) grad.emplace_back(f.geom, spectral_.derivative(c, a));
    return grad;
  }

 private:
  static void check_time(double t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::NegativeTime, "heat semigroup needs t >= 0");
  }

  Spectral spectral_;
};

/// Pointwise magnitude of a vector field given by components.
inline ScalarField pointwise_norm(const std::vector<ScalarField>& comps) {
  ScalarField out(comps.front().geom);
  for (const auto& c : comps) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * c[i];
  }
  for (double& v : out.values) v = std::sqrt(v);
  return out;
}

// ---------------------------------------------------------------------------
// Image-sum kernel.

namespace detail {

/// log sum_m exp(-(delta + L m)^2 / (4t)) with the truncation |m| <= M*
/// chosen so the discarded tail is below 1e-14 of the retained sum.
inline double log_periodized_gaussian_1d(double delta, double period, double t) {
  const double need = 4.0 * t * std::log(1e15);
  int mstar = 0;
  while (period * period * ((mstar + 0.5) * (mstar + 0.5) - 0.25) < need) ++mstar;
  double best = -kInf;
  std::vector<double> expo;
  for (int m = -mstar - 1; m <= mstar + 1; ++m) {
    const double d = delta + period * m;
    expo.push_back(-d * d / (4.0 * t));
    best = std::max(best, expo.back());
  }
  double s = 0.0;
  for (double e : expo) s += std::exp(e - best);
  return best + std::log(s);
}

}  // namespace detail

/// log H(x, y, t) on the torus.
inline double kernel_log_eval(const TorusGeometry& geom, std::size_t x, std::size_t y, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorKind::TimeOutOfRange, "kernel evaluation needs 0 < t <= 1");
  const MultiIndex a = geom.unflatten(x);
  const MultiIndex b = geom.unflatten(y);
  const int n = geom.dim();
  double out = -0.5 * n * std::log(4.0 * std::numbers::pi * t);
  for (int ax = 0; ax < n; ++ax) {
    const double delta = geom.wrapped_offset(a[ax] - b[ax]) * geom.spacing();
    out += detail::log_periodized_gaussian_1d(delta, geom.period(), t);
  }
  return out;
}

inline double kernel_eval(const TorusGeometry& geom, std::size_t x, std::size_t y, double t) {
  return std::exp(kernel_log_eval(geom, x, y, t));
}

struct KernelSample {
  std::size_t x = 0;
  std::size_t y = 0;
  double t = 0.0;
  double value = 0.0;
  double log_value = 0.0;
};

/// Pairs (0, y) for y in the nonnegative orthant 0 <= y_a <= N/2; by the
/// reflection symmetries of the torus these realize every distance class.
inline std::vector<std::pair<std::size_t, std::size_t>> orthant_sample_pairs(const TorusGeometry& geom) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const int half = geom.points_per_axis() / 2;
  const int kmax = geom.dim() == 3 ? half : 0;
  for (int i = 0; i <= half; ++i)
    for (int j = 0; j <= half; ++j)
      for (int k = 0; k <= kmax; ++k) pairs.emplace_back(0, geom.flatten({i, j, k}));
  return pairs;
}

struct GaussianBounds {
  double c_upper = 0.0;  ///< smallest C_u with H <= C_u t^{-n/2} exp(-d^2/(C_u t))
  double c_lower = 0.0;  ///< smallest C_l with t^{-n/2} exp(-d^2/(2t)) <= C_l H
  std::size_t samples = 0;
};

inline GaussianBounds fit_gaussian_bounds(const TorusGeometry& geom, const std::vector<double>& t_grid,
                                          const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const double half_n = 0.5 * geom.dim();
  GaussianBounds out;
  double log_cu = -kInf;
  double log_cl = -kInf;
  for (double t : t_grid) {
    for (const auto& [x, y] : pairs) {
      const double log_h = kernel_log_eval(geom, x, y, t);
      const double d = geom.distance(x, y);
      const double a = d * d / t;
      // Upper: need log C - a e^{-log C} >= log H + (n/2) log t; the left side
      // is increasing in log C.
      const double target = log_h + half_n * std::log(t);
      auto g = [a](double lc) { return lc - a * std::exp(-lc); };
      if (!(log_cu > -kInf && g(log_cu) >= target)) {
        double lo = -60.0, hi = 60.0;
        for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
          const double mid = 0.5 * (lo + hi);
          (g(mid) >= target ? hi : lo) = mid;
        }
        log_cu = std::max(log_cu, hi);
      }
      log_cl = std::max(log_cl, -half_n * std::log(t) - 0.5 * a - log_h);
      ++out.samples;
    }
  }
  out.c_upper = std::exp(log_cu);
  out.c_lower = std::exp(log_cl);
  return out;
}

// ---------------------------------------------------------------------------
// Exponent certification.

/// Fits log ||H_t f||_{s2,lambda} against log t and compares it with the
/// smoothing exponent -(lambda/2)(1/s1 - 1/s2).
inline RateFit smoothing_exponent(const ScalarField& f, double s1, double s2, double lambda,
                                  const std::vector<double>& t_grid, const MorreyEvaluator& eval,
                                  const HeatSemigroup& heat) {
  if (!(s1 >= 1.0 && s1 <= s2)) throw Error(ErrorKind::InvalidArgument, "need 1 <= s1 <= s2");
  if (t_grid.size() < 6) throw Error(ErrorKind::InvalidArgument, "need at least 6 times");
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorKind::TimeOutOfRange, "times must lie in (0, 1]");
  }
  const double inv2 = std::isinf(s2) ? 0.0 : 1.0 / s2;
  RateFit fit;
  fit.target_exponent = -0.5 * lambda * (1.0 / s1 - inv2);
  fit.t_begin = t_grid.front();
  fit.t_end = t_grid.back();
  const double base = eval.norm(f, {s1, lambda});
  if (!(base > 0.0)) throw Error(ErrorKind::DegenerateFit, "initial norm vanishes");
  const auto coeffs = heat.spectral().forward(f.view());
  std::vector<double> norms;
  for (double t : t_grid) {
    const auto ht = heat.spectral().inverse(heat.propagate_coefficients(coeffs, t));
    const double v = eval.norm(ht, {s2, lambda});
    norms.push_back(v);
    fit.constant_hat = std::max(fit.constant_hat, std::pow(t, -fit.target_exponent) * v / base);
  }
  const auto line = fit_power_law(t_grid, norms);
  fit.fitted_exponent = line.slope;
  fit.residual = line.rms_residual;
  return fit;
}

struct GradientFit {
  RateFit from_data;      ///< against t^{-(n/2)(1/q-1/r) - 1/2} ||f||_q
  RateFit from_gradient;  ///< against t^{-(n/2)(1/q-1/r)} ||grad f||_q
};

inline GradientFit gradient_estimate_check(const ScalarField& f, double q, double r,
                                           const std::vector<double>& t_grid, const HeatSemigroup& heat) {
  if (!(q >= 1.0 && q <= r)) throw Error(ErrorKind::InvalidArgument, "need 1 <= q <= r");
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorKind::TimeOutOfRange, "times must lie in (0, 1]");
  }
  const int n = f.geom.dim();
  const double inv_r = std::isinf(r) ? 0.0 : 1.0 / r;
  const double spread = 0.5 * n * (1.0 / q - inv_r);
  GradientFit out;
  out.from_data.target_exponent = -spread - 0.5;
  out.from_gradient.target_exponent = -spread;
  for (RateFit* fit : {&out.from_data, &out.from_gradient}) {
    fit->t_begin = t_grid.front();
    fit->t_end = t_grid.back();
  }
  const double data_norm = lp_norm(f, q);
  const double grad_norm = lp_norm(pointwise_norm(heat.gradient_propagate(f, 0.0)), q);
  std::vector<double> norms;
  for (double t : t_grid) {
    const double v = lp_norm(pointwise_norm(heat.gradient_propagate(f, t)), r);
    norms.push_back(v);
    if (data_norm > 0.0) {
      out.from_data.constant_hat =
          std::max(out.from_data.constant_hat, std::pow(t, spread + 0.5) * v / data_norm);
    }
    if (grad_norm > 0.0) {
      out.from_gradient.constant_hat =
          std::max(out.from_gradient.constant_hat, std::pow(t, spread) * v / grad_norm);
    }
  }
  const auto line = fit_power_law(t_grid, norms);
  for (RateFit* fit : {&out.from_data, &out.from_gradient}) {
    fit->fitted_exponent = line.slope;
    fit->residual = line.rms_residual;
  }
  return out;
}

}  // namespace morreylab
