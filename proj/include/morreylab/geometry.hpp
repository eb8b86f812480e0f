#pragma once

// Flat torus T^n = (R / L Z)^n sampled on a uniform N^n grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "morreylab/error.hpp"

namespace morreylab {

using MultiIndex = std::array<int, 3>;

/// Volume of the Euclidean unit ball in dimension n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

class TorusGeometry {
 public:
  TorusGeometry(int n, double period, int points_per_axis)
      : n_(n), period_(period), points_(points_per_axis) {
    if (n != 2 && n != 3) {
      throw Error(ErrorKind::InvalidGeometry, "dimension must be 2 or 3");
    }
    if (points_per_axis < 8 || points_per_axis % 2 != 0) {
      throw Error(ErrorKind::InvalidGeometry, "N must be even and at least 8");
    }
    if (!(period >= 4.0)) {
      throw Error(ErrorKind::InvalidGeometry, "period L must be at least 4");
    }
    size_ = 1;
    for (int a = 0; a < n; ++a) size_ *= static_cast<std::size_t>(points_per_axis);
  }

  int dim() const noexcept { return n_; }
  double period() const noexcept { return period_; }
  int points_per_axis() const noexcept { return points_; }
  double spacing() const noexcept { return period_ / points_; }
  double cell_volume() const noexcept { return std::pow(spacing(), n_); }
  double volume() const noexcept { return std::pow(period_, n_); }
  std::size_t size() const noexcept { return size_; }

  /// Row-major, last axis fastest. Unused trailing axes are 0.
  MultiIndex unflatten(std::size_t flat) const {
    MultiIndex idx{0, 0, 0};
    for (int a = n_ - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % static_cast<std::size_t>(points_));
      flat /= static_cast<std::size_t>(points_);
    }
    return idx;
  }

  std::size_t flatten(const MultiIndex& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < n_; ++a) {
      int i = idx[a] % points_;
      if (i < 0) i += points_;
      flat = flat * static_cast<std::size_t>(points_) + static_cast<std::size_t>(i);
    }
    return flat;
  }

  std::array<double, 3> position(std::size_t flat) const {
    const MultiIndex idx = unflatten(flat);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < n_; ++a) x[a] = idx[a] * spacing();
    return x;
  }

  /// Minimum-image offset per axis, in grid units, folded into [-N/2, N/2].
  int wrapped_offset(int delta) const {
    int d = delta % points_;
    if (d > points_ / 2) d -= points_;
    if (d < -points_ / 2) d += points_;
    return d;
  }

  /// Squared minimum-image distance in grid units (exact integer).
  std::int64_t squared_grid_distance(std::size_t i, std::size_t j) const {
    const MultiIndex a = unflatten(i);
    const MultiIndex b = unflatten(j);
    std::int64_t s = 0;
    for (int ax = 0; ax < n_; ++ax) {
      const std::int64_t d = wrapped_offset(a[ax] - b[ax]);
      s += d * d;
    }
    return s;
  }

  /// Periodic Euclidean distance between two grid points.
  double distance(std::size_t i, std::size_t j) const {
    return spacing() * std::sqrt(static_cast<double>(squared_grid_distance(i, j)));
  }

  double distance_to_origin(std::size_t i) const { return distance(i, 0); }

  bool operator==(const TorusGeometry& o) const {
    return n_ == o.n_ && period_ == o.period_ && points_ == o.points_;
  }

 private:
  int n_;
  double period_;
  int points_;
  std::size_t size_ = 1;
};

/// Minimum-image distance between arbitrary points of the torus with period L.
inline double periodic_distance(const double* x, const double* y, int n, double period) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    double d = std::fmod(x[a] - y[a], period);
    if (d > 0.5 * period) d -= period;
    if (d < -0.5 * period) d += period;
    s += d * d;
  }
  return std::sqrt(s);
}

/// Balls of one radius centred on a sub-lattice of stride <= R/(2h).
///
/// Membership is translation invariant on the torus, so each ball is the
/// centre plus a shared stencil of integer offsets with |m| h <= R.
class BallCover {
 public:
  BallCover(const TorusGeometry& geom, double radius) : geom_(geom), radius_(radius) {
    const double h = geom.spacing();
    if (radius < 2.0 * h * (1.0 - 1e-12)) {
      throw Error(ErrorKind::RadiusTooSmall, "ball radius below two grid spacings");
    }
    if (radius > 1.0 + 1e-12) {
      throw Error(ErrorKind::InvalidArgument, "ball radius above 1");
    }
    const double rr = radius / h;
    const int reach = static_cast<int>(std::floor(rr + 1e-9));
    const double rr2 = rr * rr * (1.0 + 1e-12);
    const int n = geom.dim();
    const int lo2 = n == 3 ? -reach : 0;
    const int hi2 = n == 3 ? reach : 0;
    for (int i = -reach; i <= reach; ++i) {
      for (int j = -reach; j <= reach; ++j) {
        for (int k = lo2; k <= hi2; ++k) {
          const double d2 = static_cast<double>(i) * i + static_cast<double>(j) * j +
                            static_cast<double>(k) * k;
          if (d2 <= rr2) stencil_.push_back({i, j, k});
        }
      }
    }
    stride_ = std::max(1, static_cast<int>(std::floor(rr / 2.0 + 1e-9)));
    for (std::size_t flat = 0; flat < geom.size(); ++flat) {
      const MultiIndex idx = geom.unflatten(flat);
      bool on_lattice = true;
      for (int a = 0; a < n; ++a) on_lattice = on_lattice && (idx[a] % stride_ == 0);
      if (on_lattice) centers_.push_back(flat);
    }
  }

  const TorusGeometry& geometry() const noexcept { return geom_; }
  double radius() const noexcept { return radius_; }
  int stride() const noexcept { return stride_; }
  const std::vector<std::size_t>& centers() const noexcept { return centers_; }
  const std::vector<MultiIndex>& stencil() const noexcept { return stencil_; }
  std::size_t members_per_ball() const noexcept { return stencil_.size(); }

  std::vector<std::size_t> member_indices(std::size_t center) const {
    const MultiIndex c = geom_.unflatten(center);
    std::vector<std::size_t> out;
    out.reserve(stencil_.size());
    for (const auto& off : stencil_) {
      out.push_back(geom_.flatten({c[0] + off[0], c[1] + off[1], c[2] + off[2]}));
    }
    return out;
  }

  /// Discrete ball volume cell_volume * |members|.
  double ball_volume() const { return geom_.cell_volume() * static_cast<double>(stencil_.size()); }

  /// Smallest V >= 1 with V^{-1} R^n <= vol(B_R) <= V R^n.
  double volume_constant() const {
    const double rn = std::pow(radius_, geom_.dim());
    const double v = ball_volume();
    return std::max({1.0, v / rn, rn / v});
  }

  /// Same sandwich relative to the Euclidean ball volume omega_n R^n.
  double normalized_volume_constant() const {
    const double rn = unit_ball_volume(geom_.dim()) * std::pow(radius_, geom_.dim());
    const double v = ball_volume();
    return std::max({1.0, v / rn, rn / v});
  }

 private:
  TorusGeometry geom_;
  double radius_;
  int stride_ = 1;
  std::vector<MultiIndex> stencil_;
  std::vector<std::size_t> centers_;
};

inline BallCover make_ball_cover(const TorusGeometry& geom, double radius) {
  return BallCover(geom, radius);
}

/// Dyadic radii 1, 1/2, 1/4, ... down to 2h, with 2h appended if not dyadic.
inline std::vector<double> dyadic_radii(const TorusGeometry& geom, double max_radius = 1.0) {
  const double floor_r = 2.0 * geom.spacing();
  std::vector<double> radii;
  for (double r = 1.0; r >= floor_r * (1.0 - 1e-12); r *= 0.5) {
    if (r <= max_radius * (1.0 + 1e-12)) radii.push_back(r);
  }
  const bool has_floor = !radii.empty() && std::abs(radii.back() - floor_r) <= 1e-12 * floor_r;
  if (!has_floor && floor_r <= max_radius * (1.0 + 1e-12)) radii.push_back(floor_r);
  return radii;
}

}  // namespace morreylab
