#pragma once

// Power-law fits by least squares on log-log data.

#include <cmath>
#include <span>
#include <vector>

#include <json.hpp>

#include "morreylab/error.hpp"

namespace morreylab {

struct RateFit {
  double target_exponent = 0.0;
  double fitted_exponent = 0.0;
  double residual = 0.0;  ///< RMS of the log-space residuals
  double t_begin = 0.0;
  double t_end = 0.0;
  double constant_hat = 0.0;

  double relative_error() const {
    if (target_exponent == 0.0) return std::abs(fitted_exponent);
    return std::abs(fitted_exponent - target_exponent) / std::abs(target_exponent);
  }
};

inline nlohmann::json to_json(const RateFit& f) {
  return {{"target_exponent", f.target_exponent},
          {"fitted_exponent", f.fitted_exponent},
          {"residual", f.residual},
          {"t_window", {f.t_begin, f.t_end}},
          {"constant_hat", f.constant_hat}};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) throw Error(ErrorKind::DegenerateFit, "need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw Error(ErrorKind::DegenerateFit, "abscissae coincide");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    ss += r * r;
  }
  out.rms_residual = std::sqrt(ss / m);
  return out;
}

/// Slope of log(values) against log(times). Throws DegenerateFit on
/// non-positive or non-finite samples.
inline LineFit fit_power_law(std::span<const double> times, std::span<const double> values) {
  std::vector<double> lx, ly;
  lx.reserve(times.size());
  ly.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]) || !(times[i] > 0.0)) {
      throw Error(ErrorKind::DegenerateFit, "non-positive or non-finite sample in power-law fit");
    }
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(values[i]));
  }
  return fit_line(lx, ly);
}

/// m log-spaced points from a to b inclusive.
inline std::vector<double> log_spaced(double a, double b, int m) {
  std::vector<double> out;
  for (int i = 0; i < m; ++i) {
    const double s = m == 1 ? 0.0 : static_cast<double>(i) / (m - 1);
    out.push_back(std::exp(std::log(a) + s * (std::log(b) - std::log(a))));
  }
  return out;
}

}  // namespace morreylab
