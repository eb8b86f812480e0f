#pragma once

// Real-to-complex FFT on the torus grid plus the matching wavevector tables.

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "morreylab/geometry.hpp"

namespace morreylab {

using Complex = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

class Spectral {
 public:
  explicit Spectral(const TorusGeometry& geom) : geom_(geom) {
    const int n = geom.dim();
    const int N = geom.points_per_axis();
    real_size_ = geom.size();
    spectral_size_ = real_size_ / static_cast<std::size_t>(N) * static_cast<std::size_t>(N / 2 + 1);
    real_buf_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * real_size_)));
    spec_buf_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * spectral_size_)));
    int dims[3] = {N, N, N};
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c(n, dims, real_buf_.get(), spec_buf_.get(), FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r(n, dims, spec_buf_.get(), real_buf_.get(), FFTW_ESTIMATE);
    }
    build_wavevectors();
  }

  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  ~Spectral() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  const TorusGeometry& geometry() const noexcept { return geom_; }
  std::size_t real_size() const noexcept { return real_size_; }
  std::size_t spectral_size() const noexcept { return spectral_size_; }

  /// |k|^2 per spectral coefficient.
  const std::vector<double>& k_squared() const noexcept { return k2_; }

  /// Wavevector component along `axis`, zeroed at the Nyquist index so that
  /// spectral derivatives of real fields stay real.
  const std::vector<double>& derivative_wavenumber(int axis) const { return kd_[axis]; }

  void forward(std::span<const double> in, std::span<Complex> out) const {
    std::copy(in.begin(), in.end(), real_buf_.get());
    fftw_execute(forward_);
    const auto* src = reinterpret_cast<const Complex*>(spec_buf_.get());
    std::copy(src, src + spectral_size_, out.begin());
  }

  std::vector<Complex> forward(std::span<const double> in) const {
    std::vector<Complex> out(spectral_size_);
    forward(in, out);
    return out;
  }

  /// Normalized inverse: inverse(forward(f)) == f.
  void inverse(std::span<const Complex> in, std::span<double> out) const {
    auto* dst = reinterpret_cast<Complex*>(spec_buf_.get());
    std::copy(in.begin(), in.end(), dst);
    fftw_execute(inverse_);
    const double scale = 1.0 / static_cast<double>(real_size_);
    for (std::size_t i = 0; i < real_size_; ++i) out[i] = real_buf_.get()[i] * scale;
  }

  std::vector<double> inverse(std::span<const Complex> in) const {
    std::vector<double> out(real_size_);
    inverse(in, out);
    return out;
  }

  /// Spectral partial derivative along `axis` of a real field.
  std::vector<double> derivative(std::span<const Complex> coeffs, int axis) const {
    std::vector<Complex> tmp(spectral_size_);
    const auto& k = kd_[axis];
    for (std::size_t i = 0; i < spectral_size_; ++i) tmp[i] = Complex(0.0, k[i]) * coeffs[i];
    return inverse(tmp);
  }

 private:
  void build_wavevectors() {
    const int n = geom_.dim();
    const int N = geom_.points_per_axis();
    const int half = N / 2 + 1;
    const double base = 2.0 * std::numbers::pi / geom_.period();
    k2_.assign(spectral_size_, 0.0);
    for (int a = 0; a < n; ++a) kd_[a].assign(spectral_size_, 0.0);
    auto signed_mode = [N](int j) { return j <= N / 2 ? j : j - N; };
    std::size_t idx = 0;
    const int n0 = N;
    const int n1 = n == 3 ? N : half;
    const int n2 = n == 3 ? half : 1;
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) {
        for (int l = 0; l < n2; ++l, ++idx) {
          int m[3] = {signed_mode(i), 0, 0};
          int raw[3] = {i, j, l};
          if (n == 2) {
            m[1] = j;  // halved axis: 0..N/2
          } else {
            m[1] = signed_mode(j);
            m[2] = l;
          }
          double s = 0.0;
          for (int a = 0; a < n; ++a) {
            const double k = base * m[a];
            s += k * k;
            const bool nyquist = (raw[a] == N / 2);
            kd_[a][idx] = nyquist ? 0.0 : k;
          }
          k2_[idx] = s;
        }
      }
    }
  }

  TorusGeometry geom_;
  std::size_t real_size_ = 0;
  std::size_t spectral_size_ = 0;
  std::unique_ptr<double, detail::FftwFree> real_buf_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_buf_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
  std::vector<double> k2_;
  std::vector<double> kd_[3];
};

}  // namespace morreylab
