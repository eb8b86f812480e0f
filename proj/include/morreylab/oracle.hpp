#pragma once

// Brute-force reference implementations. They share no code path with the
// FFT evaluator: membership is decided from continuous positions and the
// minimum-image distance, and every ball sum is an explicit loop.

#include <cmath>
#include <vector>

#include "morreylab/field.hpp"
#include "morreylab/geometry.hpp"
#include "morreylab/morrey.hpp"

namespace morreylab::oracle {

/// Members of B_R(x) by direct distance test over the whole grid.
inline std::vector<std::size_t> ball_members(const TorusGeometry& geom, std::size_t center, double radius) {
  std::vector<std::size_t> out;
  const auto c = geom.position(center);
  for (std::size_t y = 0; y < geom.size(); ++y) {
    const auto p = geom.position(y);
    if (periodic_distance(c.data(), p.data(), geom.dim(), geom.period()) <= radius * (1.0 + 1e-9)) out.push_back(y);
  }
  return out;
}

/// Cover centres: grid points whose coordinates are multiples of stride * h.
inline std::vector<std::size_t> cover_centers(const TorusGeometry& geom, double radius) {
  const double h = geom.spacing();
  const int stride = std::max(1, static_cast<int>(std::floor(radius / (2.0 * h) + 1e-9)));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const auto x = geom.position(i);
    bool ok = true;
    for (int a = 0; a < geom.dim(); ++a) {
      const long cell = std::lround(x[a] / h);
      ok = ok && cell % stride == 0;
    }
    if (ok) out.push_back(i);
  }
  return out;
}

inline double morrey_norm(const ScalarField& f, MorreyParams params, const std::vector<double>& radii,
                          CenterSet centers) {
  const TorusGeometry& geom = f.geom;
  const int n = geom.dim();
  if (std::isinf(params.q)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  double best = 0.0;
  for (double r : radii) {
    std::vector<std::size_t> cs;
    if (centers == CenterSet::Cover) {
      cs = cover_centers(geom, r);
    } else {
      for (std::size_t i = 0; i < geom.size(); ++i) cs.push_back(i);
    }
    for (std::size_t c : cs) {
      double s = 0.0;
      for (std::size_t y : ball_members(geom, c, r)) s += std::pow(std::abs(f[y]), params.q);
      best = std::max(best, std::pow(r, params.lambda - n) * s * geom.cell_volume());
    }
  }
  return std::pow(best, 1.0 / params.q);
}

}  // namespace morreylab::oracle
