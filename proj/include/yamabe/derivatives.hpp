#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "yamabe/chart.hpp"
#include "yamabe/fields.hpp"

namespace yamabe {

namespace detail {

/// Fourth-order centered first derivative with periodic wraparound along one sampled axis.
/// `in`/`out` hold `components` interleaved values per node.
inline void periodic_derivative(std::span<const double> in, std::span<double> out, const GridChart& chart,
                                std::size_t axis, std::size_t components) {
  const std::size_t nodes = chart.node_count();
  const std::size_t stride = chart.stride(axis);
  const auto r = static_cast<std::size_t>(chart.resolution()[axis]);
  const double inv12h = 1.0 / (12.0 * chart.spacing(axis));
  for (std::size_t node = 0; node < nodes; ++node) {
    const std::size_t pos = (node / stride) % r;
    const std::size_t base = node - pos * stride;
    const std::size_t p1 = base + ((pos + 1) % r) * stride;
    const std::size_t p2 = base + ((pos + 2) % r) * stride;
    const std::size_t m1 = base + ((pos + r - 1) % r) * stride;
    const std::size_t m2 = base + ((pos + r - 2) % r) * stride;
    for (std::size_t c = 0; c < components; ++c) {
      out[node * components + c] = (in[m2 * components + c] - 8.0 * in[m1 * components + c] +
                                    8.0 * in[p1 * components + c] - in[p2 * components + c]) *
                                   inv12h;
    }
  }
}

inline std::vector<double> periodic_derivative(std::span<const double> in, const GridChart& chart, std::size_t axis,
                                               std::size_t components = 1) {
  std::vector<double> out(in.size());
  periodic_derivative(in, out, chart, axis, components);
  return out;
}

/// Fourier symbol magnitude of the stencil at wavenumber k: (8 sin(kh) - sin(2kh)) / (6h).
inline double stencil_symbol(double k, double h) { return (8.0 * std::sin(k * h) - std::sin(2.0 * k * h)) / (6.0 * h); }

/// out[i] = sum_k c[k] in[i + offset + k] along one axis (periodic), single component.
template <std::size_t K>
void axis_stencil(std::span<const double> in, std::span<double> out, const GridChart& chart, std::size_t axis,
                  int offset, const std::array<double, K>& c) {
  const std::size_t nodes = chart.node_count();
  const std::size_t stride = chart.stride(axis);
  const auto r = static_cast<std::size_t>(chart.resolution()[axis]);
  for (std::size_t node = 0; node < nodes; ++node) {
    const std::size_t pos = (node / stride) % r;
    const std::size_t base = node - pos * stride;
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = (pos + r + static_cast<std::size_t>(offset + static_cast<int>(r)) + k) % r;
      s += c[k] * in[base + idx * stride];
    }
    out[node] = s;
  }
}

/// Fourth-order derivative at the half points i + 1/2 (stored at index i).
inline void staggered_derivative(std::span<const double> in, std::span<double> out, const GridChart& chart,
                                 std::size_t axis) {
  const double h = chart.spacing(axis);
  axis_stencil<4>(in, out, chart, axis, -1, {1.0 / (24.0 * h), -27.0 / (24.0 * h), 27.0 / (24.0 * h), -1.0 / (24.0 * h)});
}

/// Fourth-order derivative at nodes of values living at half points; the negative adjoint of
/// `staggered_derivative`.
inline void staggered_divergence(std::span<const double> in, std::span<double> out, const GridChart& chart,
                                 std::size_t axis) {
  const double h = chart.spacing(axis);
  axis_stencil<4>(in, out, chart, axis, -2, {1.0 / (24.0 * h), -27.0 / (24.0 * h), 27.0 / (24.0 * h), -1.0 / (24.0 * h)});
}

/// Fourth-order interpolation of nodal values to the half points i + 1/2.
inline void midpoint_interpolate(std::span<const double> in, std::span<double> out, const GridChart& chart,
                                 std::size_t axis) {
  axis_stencil<4>(in, out, chart, axis, -1, {-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0});
}

/// Symbol magnitude of the staggered derivative: (27 sin(kh/2) - sin(3kh/2)) / (12h); nonzero for 0 < |kh| <= pi.
inline double staggered_symbol(double k, double h) {
  return (27.0 * std::sin(0.5 * k * h) - std::sin(1.5 * k * h)) / (12.0 * h);
}

/// Divergence-form operator (1/rho) sum_ij d_i (K^{ij} d_j f) with K given per node (n x n, symmetric).
/// Diagonal terms use the compact staggered form (no odd-even decoupling); mixed terms use
/// centered differences. Symmetric with respect to the weights rho.
inline void divergence_form(const GridChart& chart, std::span<const double> coeff, std::span<const double> rho,
                            std::span<const double> f, std::span<double> out) {
  const auto n = chart.axis_count();
  const std::size_t nodes = chart.node_count();
  std::vector<double> kdiag(nodes), khalf(nodes), df(nodes), flux(nodes), dflux(nodes);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t node = 0; node < nodes; ++node) kdiag[node] = coeff[(node * n + i) * n + i];
    midpoint_interpolate(kdiag, khalf, chart, i);
    staggered_derivative(f, df, chart, i);
    for (std::size_t node = 0; node < nodes; ++node) flux[node] = khalf[node] * df[node];
    staggered_divergence(flux, dflux, chart, i);
    for (std::size_t node = 0; node < nodes; ++node) out[node] += dflux[node];
  }
  if (n > 1) {
    std::vector<std::vector<double>> grad(n);
    for (std::size_t a = 0; a < n; ++a) grad[a] = periodic_derivative(f, chart, a);
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (std::size_t node = 0; node < nodes; ++node) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) s += coeff[(node * n + i) * n + j] * grad[j][node];
        flux[node] = s;
        any = any || s != 0.0;
      }
      if (!any) continue;
      periodic_derivative(flux, dflux, chart, i, 1);
      for (std::size_t node = 0; node < nodes; ++node) out[node] += dflux[node];
    }
  }
  for (std::size_t node = 0; node < nodes; ++node) out[node] /= rho[node];
}

} // namespace detail

/// d f / d x^axis by fourth-order centered differences on a periodic grid.
inline ScalarField partial_derivative(const ScalarField& f, std::size_t axis) {
  require_periodic(f.chart(), "partial_derivative");
  if (axis >= f.chart().axis_count()) throw ShapeError("derivative axis out of range");
  return {f.chart(), detail::periodic_derivative(f.values(), f.chart(), axis), f.weight()};
}

/// Componentwise d/dx^axis of a tensor field.
inline SymTensorField partial_derivative(const SymTensorField& t, std::size_t axis) {
  require_periodic(t.chart(), "partial_derivative");
  if (axis >= t.chart().axis_count()) throw ShapeError("derivative axis out of range");
  const auto nn = static_cast<std::size_t>(t.dim() * t.dim());
  return {t.chart(), detail::periodic_derivative(t.values(), t.chart(), axis, nn), t.weight()};
}

} // namespace yamabe
