#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "yamabe/fields.hpp"
#include "yamabe/linalg.hpp"

namespace yamabe {

/// Pairwise (cascade) summation in index order; deterministic and O(log N) error growth.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Coordinate measure of one grid cell (the trapezoid weight on a periodic grid).
inline double cell_volume(const GridChart& chart) {
  return chart.coordinate_volume() / static_cast<double>(chart.node_count());
}

/// |dVol_g| = sqrt(det g) per node, weight 1.
inline DensityField volume_density(const MetricField& g) {
  const int n = g.dim();
  std::vector<double> v(g.node_count());
  linalg::Scratch l{};
  for (std::size_t node = 0; node < v.size(); ++node) {
    linalg::cholesky(g.at(node), n, l);
    v[node] = std::sqrt(linalg::det_from_cholesky(l, n));
  }
  return {g.chart(), std::move(v), Weight{1}};
}

/// rho^alpha; the result carries weight alpha * weight(rho).
inline DensityField density_power(const DensityField& rho, Weight alpha) {
  std::vector<double> v(rho.size());
  if (alpha.is_zero()) {
    std::fill(v.begin(), v.end(), 1.0);
    return {rho.chart(), std::move(v), Weight{}};
  }
  const double a = alpha.value();
  const bool positive_integer = alpha.den() == 1 && alpha.num() > 0;
  for (std::size_t node = 0; node < v.size(); ++node) {
    const double r = rho[node];
    if (!(r > 0.0) && !(positive_integer && std::isfinite(r))) {
      throw DomainError("density_power: non-positive density at node " + std::to_string(node));
    }
    v[node] = std::pow(r, a);
  }
  return {rho.chart(), std::move(v), alpha * rho.weight()};
}

/// Integral of a weight-1 density over the chart (periodic trapezoid rule).
inline double integrate(const DensityField& rho) {
  require_weight(rho.weight(), Weight{1}, "integrate");
  return pairwise_sum(rho.values()) * cell_volume(rho.chart());
}

/// Integral of f * rho where weight(f) + weight(rho) = 1 (typically a function against |dVol_g|).
inline double integrate(const ScalarField& f, const DensityField& rho) {
  require_weight(f.weight() + rho.weight(), Weight{1}, "integrate");
  if (!f.chart().same_shape(rho.chart())) throw ShapeError("integrate: chart mismatch");
  std::vector<double> prod(f.size());
  for (std::size_t node = 0; node < prod.size(); ++node) prod[node] = f[node] * rho[node];
  return pairwise_sum(prod) * cell_volume(f.chart());
}

inline double volume(const MetricField& g) { return integrate(volume_density(g)); }

} // namespace yamabe
