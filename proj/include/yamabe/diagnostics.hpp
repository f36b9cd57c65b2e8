#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "yamabe/conformal.hpp"
#include "yamabe/curvature.hpp"
#include "yamabe/functional.hpp"

namespace yamabe {

/// Pointwise g-norm |T|_g = sqrt(g^{ia} g^{jb} T_ij T_ab).
inline ScalarField pointwise_norm(const MetricField& g, const SymTensorField& t) {
  const auto ginv = inverse_metric(g);
  std::vector<double> out(g.node_count());
  for (std::size_t node = 0; node < out.size(); ++node)
    out[node] = std::sqrt(std::max(0.0, linalg::contract(ginv.at(node), t.at(node), t.at(node), g.dim())));
  return {g.chart(), std::move(out)};
}

/// sup over nodes of |Ric - (R/n) g|_g; zero exactly for Einstein metrics.
inline double einstein_residual(const MetricField& g) { return pointwise_norm(g, trace_free_ricci(g)).max(); }

/// Residual of the two-Yamabe-metric identity for g and u^2 g:
///   u^{-1}(1 + u^{n-2}) [Ric - R/n g]  =  -(n-2) [Hess(u^{-1}) - (1/n) tr_g Hess(u^{-1}) g],
/// returned as the sup over nodes of the g-norm of LHS - RHS.
inline double anderson_residual(const MetricField& g, const ScalarField& u) {
  const int n = g.dim();
  require_conformal_dim(n, "anderson_residual");
  if (!g.chart().same_shape(u.chart())) throw ShapeError("anderson_residual: chart mismatch");
  std::vector<double> inv(u.size());
  for (std::size_t node = 0; node < inv.size(); ++node) {
    if (!(u[node] > 0.0)) throw DomainError("anderson_residual: u must be positive");
    inv[node] = 1.0 / u[node];
  }
  const auto tf = trace_free_ricci(g);
  SymTensorField rhs = SymTensorField::zero(g.chart());
  if (g.chart().is_periodic_grid()) {
    rhs = trace_free_project(g.tensor(), hessian(g, ScalarField(g.chart(), inv))).scaled(-(n - 2.0));
  }
  auto diff = tf;
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const double f = inv[node] * (1.0 + std::pow(u[node], n - 2.0));
    for (std::size_t k = 0; k < nn; ++k)
      diff.values()[node * nn + k] = f * tf.values()[node * nn + k] - rhs.values()[node * nn + k];
  }
  return pointwise_norm(g, diff).max();
}

/// Scalar curvature of phi^{4/(n-2)} g through the conformal Laplacian:
///   R(phi^{4/(n-2)} g) = phi^{-(n+2)/(n-2)} (-4(n-1)/(n-2) Lap_g phi + R_g phi).
inline ScalarField conformal_scalar_curvature(const MetricField& g, const ScalarField& phi) {
  const int n = g.dim();
  require_conformal_dim(n, "conformal_scalar_curvature");
  const double a = 4.0 * (n - 1) / (n - 2);
  const double p = (n + 2.0) / (n - 2.0);
  const auto r = scalar_curvature(g);
  std::vector<double> out(g.node_count());
  if (g.chart().is_model()) {
    for (std::size_t node = 0; node < out.size(); ++node) out[node] = std::pow(phi[node], -p) * r[node] * phi[node];
  } else {
    const auto lap = laplacian(g, phi);
    for (std::size_t node = 0; node < out.size(); ++node)
      out[node] = std::pow(phi[node], -p) * (-a * lap[node] + r[node] * phi[node]);
  }
  return {g.chart(), std::move(out)};
}

struct CscResidual {
  double lambda = 0.0;   ///< volume-weighted mean scalar curvature of the rescaled metric
  double residual = 0.0; ///< max |R - lambda|
};

/// How far phi^{4/(n-2)} g is from constant scalar curvature.
inline CscResidual csc_residual(const MetricField& g, const ScalarField& phi) {
  const int n = g.dim();
  const auto rhat = conformal_scalar_curvature(g, phi);
  const auto rho = volume_density(g);
  const double q = 2.0 * n / (n - 2.0);
  std::vector<double> w(g.node_count());
  for (std::size_t node = 0; node < w.size(); ++node) w[node] = std::pow(phi[node], q) * rho[node];
  std::vector<double> rw(w.size());
  for (std::size_t node = 0; node < w.size(); ++node) rw[node] = rhat[node] * w[node];
  CscResidual out;
  out.lambda = pairwise_sum(rw) / pairwise_sum(w);
  for (double v : rhat.values()) out.residual = std::max(out.residual, std::abs(v - out.lambda));
  return out;
}

} // namespace yamabe
