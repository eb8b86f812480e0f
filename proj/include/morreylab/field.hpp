#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "morreylab/geometry.hpp"

namespace morreylab {

/// Grid samples of a real function on the torus.
struct ScalarField {
  TorusGeometry geom;
  std::vector<double> values;

  explicit ScalarField(const TorusGeometry& g, double fill = 0.0) : geom(g), values(g.size(), fill) {}
  ScalarField(const TorusGeometry& g, std::vector<double> v) : geom(g), values(std::move(v)) {
    if (values.size() != g.size()) throw Error(ErrorKind::InvalidArgument, "field size does not match grid");
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> view() const { return values; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  /// Integral with the midpoint (cell-volume) measure.
  double integral() const { return mean() * geom.volume(); }
};

/// Lebesgue norm with the discrete measure cell_volume * counting measure.
inline double lp_norm(std::span<const double> f, double p, double cell_volume) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "Lebesgue exponent must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  // Scaling by the max keeps large exponents away from overflow.
  double s = 0.0;
  for (double v : f) s += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(s * cell_volume, 1.0 / p);
}

inline double lp_norm(const ScalarField& f, double p) {
  return lp_norm(f.view(), p, f.geom.cell_volume());
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace morreylab
