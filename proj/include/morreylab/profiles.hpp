#pragma once

// Reference initial data on the torus. All radial profiles are centred at the
// grid origin and use the minimum-image distance.

#include <cmath>
#include <numbers>

#include "morreylab/field.hpp"

namespace morreylab::profiles {

inline ScalarField constant(const TorusGeometry& geom, double value) { return ScalarField(geom, value); }

/// One-cell spike of the given mass at the origin.
inline ScalarField spike(const TorusGeometry& geom, double mass = 1.0) {
  ScalarField f(geom);
  f[0] = mass / geom.cell_volume();
  return f;
}

/// Average of |y|^{-a} over the unit cube [-1/2, 1/2]^n (a < n).
inline double unit_cube_average_of_power(int n, double a) {
  const int m = n == 3 ? 64 : 512;
  const double step = 1.0 / m;
  double s = 0.0;
  const int kmax = n == 3 ? m : 1;
  for (int i = 0; i < m; ++i) {
    const double x = -0.5 + (i + 0.5) * step;
    for (int j = 0; j < m; ++j) {
      const double y = -0.5 + (j + 0.5) * step;
      for (int k = 0; k < kmax; ++k) {
        const double z = n == 3 ? -0.5 + (k + 0.5) * step : 0.0;
        s += std::pow(x * x + y * y + z * z, -0.5 * a);
      }
    }
  }
  return s / std::pow(static_cast<double>(m), n);
}

/// amplitude * |x|^{-a}: homogeneous of degree -a, hence invariant under the
/// Morrey scaling with lambda/s = a. The origin cell holds the cell average.
/// For a >= n the profile degenerates to the point mass and the unit-mass
/// spike is returned instead.
inline ScalarField power_spike(const TorusGeometry& geom, double a, double amplitude = 1.0) {
  const int n = geom.dim();
  if (a >= n) return spike(geom, amplitude);
  ScalarField f(geom);
  for (std::size_t i = 1; i < geom.size(); ++i) f[i] = amplitude * std::pow(geom.distance_to_origin(i), -a);
  f[0] = amplitude * std::pow(geom.spacing(), -a) * unit_cube_average_of_power(n, a);
  return f;
}

/// min(|x|^{-a}, cap).
inline ScalarField truncated_power(const TorusGeometry& geom, double a, double cap) {
  ScalarField f(geom);
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const double d = geom.distance_to_origin(i);
    f[i] = d == 0.0 ? cap : std::min(std::pow(d, -a), cap);
  }
  return f;
}

/// Scale-critical bubble amplitude * w^{-2/(p-1)} (1 + |x|^2 / w^2)^{-1/(p-1)}.
/// Its tail decays like |x|^{-2/(p-1)}, so its critical Morrey norm does not
/// depend on the width.
inline ScalarField bubble(const TorusGeometry& geom, double p, double amplitude, double width) {
  ScalarField f(geom);
  const double e = 1.0 / (p - 1.0);
  const double pre = amplitude * std::pow(width, -2.0 * e);
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const double d = geom.distance_to_origin(i) / width;
    f[i] = pre * std::pow(1.0 + d * d, -e);
  }
  return f;
}

/// amplitude * cos(k . x) with k = 2 pi m / L.
inline ScalarField fourier_mode(const TorusGeometry& geom, const MultiIndex& mode, double amplitude = 1.0) {
  ScalarField f(geom);
  const double base = 2.0 * std::numbers::pi / geom.period();
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const auto x = geom.position(i);
    double phase = 0.0;
    for (int a = 0; a < geom.dim(); ++a) phase += base * mode[a] * x[a];
    f[i] = amplitude * std::cos(phase);
  }
  return f;
}

/// Smooth compactly supported bump exp(1 - 1/(1 - (r/w)^2)), peak 1 at the origin.
inline double bump(double r, double width) {
  const double s = r / width;
  if (s >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

}  // namespace morreylab::profiles
