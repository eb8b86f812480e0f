#pragma once

// Morrey norms  ||f||_{q,lambda} = sup_{x, R} (R^{lambda-n} int_{B_R(x)} |f|^q)^{1/q}
// over a finite radii set, with ball integrals at every centre obtained from
// one FFT convolution per radius.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morreylab/field.hpp"
#include "morreylab/geometry.hpp"
#include "morreylab/spectral.hpp"

namespace morreylab {

struct MorreyParams {
  double q = 1.0;
  double lambda = 0.0;

  void validate(int n) const {
    if (!(q >= 1.0)) throw Error(ErrorKind::InvalidArgument, "Morrey exponent q must be >= 1");
    if (!(lambda >= 0.0 && lambda <= n)) {
      throw Error(ErrorKind::InvalidArgument, "Morrey weight lambda must lie in [0, n]");
    }
  }
};

enum class CenterSet {
  Cover,          ///< centres of each radius' ball cover (lattice stride <= R/2)
  AllGridPoints,  ///< every grid point
};

struct MorreyReport {
  double q = 1.0;
  double lambda = 0.0;
  std::vector<double> radii;
  double value = 0.0;
  std::size_t argmax_center = 0;
  double argmax_radius = 0.0;
};

class MorreyEvaluator {
 public:
  MorreyEvaluator(const TorusGeometry& geom, std::vector<double> radii,
                  CenterSet centers = CenterSet::Cover)
      : geom_(geom), radii_(std::move(radii)), center_set_(centers), spectral_(geom) {
    if (radii_.empty()) throw Error(ErrorKind::EmptyRadiiSet, "no radii supplied");
    covers_.reserve(radii_.size());
    kernels_.reserve(radii_.size());
    for (double r : radii_) {
      covers_.emplace_back(geom, r);
      std::vector<double> indicator(geom.size(), 0.0);
      for (const auto& off : covers_.back().stencil()) indicator[geom.flatten(off)] = 1.0;
      kernels_.push_back(spectral_.forward(indicator));
    }
  }

  /// Dyadic radii down to 2h.
  explicit MorreyEvaluator(const TorusGeometry& geom, CenterSet centers = CenterSet::Cover)
      : MorreyEvaluator(geom, dyadic_radii(geom), centers) {}

  const TorusGeometry& geometry() const noexcept { return geom_; }
  const std::vector<double>& radii() const noexcept { return radii_; }
  const std::vector<BallCover>& covers() const noexcept { return covers_; }
  CenterSet center_set() const noexcept { return center_set_; }
  const Spectral& spectral() const noexcept { return spectral_; }

  /// sum_{y in B_R(x)} density(y) * cell_volume for every grid point x.
  std::vector<double> ball_integrals(std::span<const double> density, std::size_t radius_index) const {
    return ball_integrals_from(spectral_.forward(density), radius_index);
  }

  std::vector<double> ball_integrals_from(std::span<const Complex> density_hat,
                                          std::size_t radius_index) const {
    const auto& kernel = kernels_.at(radius_index);
    std::vector<Complex> prod(density_hat.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = density_hat[i] * kernel[i];
    std::vector<double> sums = spectral_.inverse(prod);
    const double cv = geom_.cell_volume();
    for (double& s : sums) s = std::max(0.0, s) * cv;
    return sums;
  }

  MorreyReport evaluate(std::span<const double> f, MorreyParams params) const {
    params.validate(geom_.dim());
    MorreyReport rep;
    rep.q = params.q;
    rep.lambda = params.lambda;
    rep.radii = radii_;
    if (std::isinf(params.q)) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::abs(f[i]) > rep.value) {
          rep.value = std::abs(f[i]);
          rep.argmax_center = i;
        }
      }
      rep.argmax_radius = radii_.front();
      return rep;
    }
    double scale = 0.0;
    for (double v : f) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
      rep.argmax_radius = radii_.front();
      return rep;
    }
    std::vector<double> density(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) density[i] = std::pow(std::abs(f[i]) / scale, params.q);
    const auto density_hat = spectral_.forward(density);
    const int n = geom_.dim();
    double best = -1.0;
    for (std::size_t r = 0; r < radii_.size(); ++r) {
      const auto sums = ball_integrals_from(density_hat, r);
      const double weight = std::pow(radii_[r], params.lambda - n);
      auto consider = [&](std::size_t c) {
        const double v = weight * sums[c];
        if (v > best) {
          best = v;
          rep.argmax_center = c;
          rep.argmax_radius = radii_[r];
        }
      };
      if (center_set_ == CenterSet::Cover) {
        for (std::size_t c : covers_[r].centers()) consider(c);
      } else {
        for (std::size_t c = 0; c < sums.size(); ++c) consider(c);
      }
    }
    rep.value = scale * std::pow(std::max(best, 0.0), 1.0 / params.q);
    return rep;
  }

  double norm(std::span<const double> f, MorreyParams params) const { return evaluate(f, params).value; }
  double norm(const ScalarField& f, MorreyParams params) const { return evaluate(f.view(), params).value; }

  /// Largest V over the radii set (literal R^n normalization).
  double volume_constant() const {
    double v = 1.0;
    for (const auto& c : covers_) v = std::max(v, c.volume_constant());
    return v;
  }

 private:
  TorusGeometry geom_;
  std::vector<double> radii_;
  CenterSet center_set_;
  Spectral spectral_;
  std::vector<BallCover> covers_;
  std::vector<std::vector<Complex>> kernels_;
};

/// Morrey norm over the given radii and each radius' cover centres.
inline MorreyReport morrey_norm(const ScalarField& f, MorreyParams params, const std::vector<double>& radii) {
  if (radii.empty()) throw Error(ErrorKind::EmptyRadiiSet, "no radii supplied");
  if (std::isinf(params.q)) {
    MorreyReport rep;
    rep.q = params.q;
    rep.lambda = params.lambda;
    rep.radii = radii;
    rep.value = lp_norm(f, kInf);
    rep.argmax_radius = radii.front();
    return rep;
  }
  return MorreyEvaluator(f.geom, radii, CenterSet::Cover).evaluate(f.view(), params);
}

/// max over cover centres x of ||f||_{L^s(B_1(x))}.
inline double sup_ls_on_unit_balls(const ScalarField& f, double s, const BallCover& cover) {
  if (!(s >= 1.0) || std::isinf(s)) throw Error(ErrorKind::InvalidArgument, "s must lie in [1, inf)");
  if (std::abs(cover.radius() - 1.0) > 1e-12) {
    throw Error(ErrorKind::WrongCoverRadius, "cover radius must be 1");
  }
  MorreyEvaluator eval(f.geom, {1.0}, CenterSet::Cover);
  // R = 1 makes the Morrey weight R^{lambda-n} trivial for any lambda.
  return eval.norm(f, {s, static_cast<double>(f.geom.dim())});
}

struct EmbeddingReport {
  double lhs = 0.0;    ///< ||f||_{q1,lambda1}
  double rhs = 0.0;    ///< ||f||_{q2,lambda2}
  double ratio = 0.0;  ///< lhs / rhs (0 when both vanish)
  double bound = 1.0;  ///< V^{1/q1 - 1/q2}
  bool holds = true;
};

/// Empirical constant of the inclusion M^{q2,lambda2} into M^{q1,lambda1}.
inline EmbeddingReport check_embedding(const ScalarField& f, MorreyParams small, MorreyParams large,
                                       const MorreyEvaluator& eval) {
  if (!(small.q <= large.q) || !(large.lambda <= large.q / small.q * small.lambda + 1e-12)) {
    throw Error(ErrorKind::ExponentOrderViolation,
                "inclusion requires q1 <= q2 and lambda2 <= (q2/q1) lambda1");
  }
  EmbeddingReport rep;
  rep.lhs = eval.norm(f, small);
  rep.rhs = eval.norm(f, large);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  const double inv_large = std::isinf(large.q) ? 0.0 : 1.0 / large.q;
  rep.bound = std::pow(eval.volume_constant(), 1.0 / small.q - inv_large);
  rep.holds = rep.ratio <= rep.bound * (1.0 + 1e-12);
  return rep;
}

}  // namespace morreylab
