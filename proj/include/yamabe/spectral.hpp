#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "yamabe/derivatives.hpp"

namespace yamabe {

namespace detail {

/// FFTW's planner is not re-entrant; executes on caller-owned arrays are.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline ComplexBuffer complex_buffer(std::size_t n) {
  return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

/// Forward/backward complex DFT plans for one periodic grid shape.
class FftPlans {
public:
  explicit FftPlans(const std::vector<int>& shape) : size_(1) {
    for (int r : shape) size_ *= static_cast<std::size_t>(r);
    auto a = complex_buffer(size_);
    auto b = complex_buffer(size_);
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), a.get(), b.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ =
        fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), a.get(), b.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const noexcept { return size_; }
  void forward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(forward_, in, out); }
  void backward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(backward_, in, out); }

private:
  std::size_t size_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

inline double wavenumber(std::size_t index, int resolution, double period) {
  const auto m = static_cast<long>(index);
  const long signed_m = m < resolution / 2 ? m : m - resolution;
  return 2.0 * std::numbers::pi * static_cast<double>(signed_m) / period;
}

} // namespace detail

/// Inverse of the constant-coefficient operator  -sum_i a_i D_i^2 + shift  on a periodic grid,
/// where D_i^2 is the compact fourth-order second difference; diagonal in Fourier space.
class SpectralPreconditioner {
public:
  SpectralPreconditioner(std::vector<int> resolution, std::vector<double> periods, std::vector<double> axis_coeffs,
                         double shift)
      : resolution_(std::move(resolution)), plans_(std::make_shared<detail::FftPlans>(resolution_)) {
    const std::size_t nodes = plans_->size();
    inverse_symbol_.resize(nodes);
    for (std::size_t node = 0; node < nodes; ++node) {
      double sym = shift;
      std::size_t rem = node;
      for (std::size_t a = resolution_.size(); a-- > 0;) {
        const auto r = static_cast<std::size_t>(resolution_[a]);
        const std::size_t idx = rem % r;
        rem /= r;
        const double h = periods[a] / resolution_[a];
        const double s = detail::staggered_symbol(detail::wavenumber(idx, resolution_[a], periods[a]), h);
        sym += axis_coeffs[a] * s * s;
      }
      inverse_symbol_[node] = 1.0 / sym;
    }
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t nodes = plans_->size();
    auto a = detail::complex_buffer(nodes);
    auto b = detail::complex_buffer(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
      a[k][0] = in[k];
      a[k][1] = 0.0;
    }
    plans_->forward(a.get(), b.get());
    for (std::size_t k = 0; k < nodes; ++k) {
      b[k][0] *= inverse_symbol_[k];
      b[k][1] *= inverse_symbol_[k];
    }
    plans_->backward(b.get(), a.get());
    const double scale = 1.0 / static_cast<double>(nodes);
    for (std::size_t k = 0; k < nodes; ++k) out[k] = a[k][0] * scale;
  }

private:
  std::vector<int> resolution_;
  std::shared_ptr<detail::FftPlans> plans_;
  std::vector<double> inverse_symbol_;
};

/// Band-limited (trigonometric) interpolant of periodic samples on [0, period).
class TrigInterpolant {
public:
  TrigInterpolant(std::span<const double> samples, double period) : period_(period), n_(samples.size()) {
    detail::FftPlans plans({static_cast<int>(n_)});
    auto a = detail::complex_buffer(n_);
    auto b = detail::complex_buffer(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      a[k][0] = samples[k];
      a[k][1] = 0.0;
    }
    plans.forward(a.get(), b.get());
    coeffs_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) coeffs_[k] = {b[k][0] / n_, b[k][1] / n_};
  }

  /// d-th derivative of the interpolant at t (Nyquist mode taken as a cosine).
  double derivative(double t, int d) const {
    double s = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const double kw = detail::wavenumber(k, static_cast<int>(n_), period_);
      const bool nyquist = 2 * k == n_;
      const std::complex<double> e = std::polar(1.0, kw * t);
      std::complex<double> factor = std::pow(std::complex<double>(0.0, kw), d);
      if (nyquist) {
        // cos(kw t) term only
        const double c = coeffs_[k].real();
        const double phase = kw * t + d * std::numbers::pi / 2.0;
        s += c * std::pow(std::abs(kw), d) * std::cos(phase);
        continue;
      }
      s += (coeffs_[k] * factor * e).real();
    }
    return s;
  }

  double operator()(double t) const { return derivative(t, 0); }

  /// Samples of the interpolant shifted so that new(t) = old(t + offset), on the original grid.
  std::vector<double> shifted(double offset) const {
    std::vector<double> out(n_);
    const double h = period_ / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = derivative(static_cast<double>(i) * h + offset, 0);
    return out;
  }

private:
  double period_;
  std::size_t n_;
  std::vector<std::complex<double>> coeffs_;
};

} // namespace yamabe
