#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "yamabe/conformal.hpp"
#include "yamabe/curvature.hpp"
#include "yamabe/integration.hpp"
#include "yamabe/quadrature.hpp"

namespace yamabe {

/// Normalized total scalar curvature Q(g) = int R dVol / Vol^{1-2/n}.
inline double total_scalar_quotient(const MetricField& g) {
  const int n = g.dim();
  const auto rho = volume_density(g);
  const double vol = integrate(rho);
  return integrate(scalar_curvature(g), rho) / std::pow(vol, 1.0 - 2.0 / n);
}

/// Ric - (R/n) g, a weight-0 symmetric tensor.
inline SymTensorField trace_free_ricci(const MetricField& g) {
  const int n = g.dim();
  const auto ric = ricci(g);
  const auto r = scalar_curvature_from(g, ric);
  auto out = ric;
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < g.node_count(); ++node)
    for (std::size_t k = 0; k < nn; ++k) out.values()[node * nn + k] -= r[node] / n * g.tensor().values()[node * nn + k];
  return out;
}

/// The certificate tensor (Ric(g) - (1/n) R(g) g) |dVol_g|^{1-2/n}, weight 1 - 2/n.
inline TensorDensityField q_map(const MetricField& g) {
  const int n = g.dim();
  return trace_free_ricci(g).times(density_power(volume_density(g), Weight::q_tensor(n)));
}

/// First variation of Q at g in the direction of a symmetric 2-tensor h:
/// Vol^{2/n-1} int < h, -Ric + R/2 g - (n-2)/(2n) Rbar g >_g dVol,  Rbar = int R dVol / Vol.
/// On trace-free h this coincides with the Besse-form bracket -Ric + 1/2 (R - Rbar) g.
inline double dQ_full(const MetricField& g, const SymTensorField& h) {
  const int n = g.dim();
  if (!g.chart().same_shape(h.chart())) throw ShapeError("dQ_full: chart mismatch");
  const auto ric = ricci(g);
  const auto r = scalar_curvature_from(g, ric);
  const auto rho = volume_density(g);
  const double vol = integrate(rho);
  const double rbar = integrate(r, rho) / vol;
  const auto ginv = inverse_metric(g);
  const auto nn = static_cast<std::size_t>(n * n);
  std::vector<double> bracket(nn);
  std::vector<double> density(g.node_count());
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const auto gn = g.at(node);
    const auto rn = ric.at(node);
    const double coeff = 0.5 * r[node] - (n - 2.0) / (2.0 * n) * rbar;
    for (std::size_t k = 0; k < nn; ++k) bracket[k] = -rn[k] + coeff * gn[k];
    density[node] = linalg::contract(ginv.at(node), h.at(node), bracket, n) * rho[node];
  }
  return std::pow(vol, 2.0 / n - 1.0) * pairwise_sum(density) * cell_volume(g.chart());
}

/// Q_Omega(c) = Q(Omega^{2/n} c).
inline double quotient_at(const DensityField& omega, const TensorDensityField& c) {
  return total_scalar_quotient(recombine(omega, c));
}

/// Derivative of c -> Q_Omega(c) along a c-trace-free direction w (weight -2/n):
/// Vol(Omega)^{2/n-1} int < w, -Ric(Omega^{2/n} c) Omega^{1-2/n} >_c.
inline double dQ_conformal_direction(const DensityField& omega, const TensorDensityField& c,
                                     const TensorDensityField& w) {
  const int n = c.dim();
  require_weight(w.weight(), Weight::class_section(n), "conformal direction");
  const auto tr = trace_with(c, w);
  double worst = 0.0;
  for (double v : tr.values()) worst = std::max(worst, std::abs(v));
  if (worst > 1e-9 * std::max(1.0, w.max_abs())) {
    throw PreconditionError("dQ_conformal_direction: direction is not c-trace-free (max |tr_c w| = " +
                            std::to_string(worst) + "); project it first");
  }
  const auto g = recombine(omega, c);
  const auto x = ricci(g).scaled(-1.0).times(density_power(omega, Weight::q_tensor(n)));
  return std::pow(integrate(omega), 2.0 / n - 1.0) * pairing(w, x, c);
}

/// Integrand of the modulus-of-continuity bound at path parameter t:
/// int_M < v, (-Ric(g_t) + R(g_t)/n g_t) det(c0 + t v)^{-1/n} Omega^{1-2/n} >_{c_t},  g_t = Omega^{2/n} c_t.
inline double modulus_integrand(const TensorDensityField& c0, const TensorDensityField& v, const DensityField& omega,
                                double t) {
  const int n = c0.dim();
  SymTensorField sum = c0;
  const auto det = detail::path_determinants(c0, v, t, sum);
  const auto ct = class_path(c0, v, t);
  const auto gt = recombine(omega, ct);
  auto x = trace_free_ricci(gt).scaled(-1.0).times(density_power(omega, Weight::q_tensor(n)));
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < det.size(); ++node) {
    const double f = std::pow(det[node], -1.0 / n);
    for (std::size_t k = 0; k < nn; ++k) x.values()[node * nn + k] *= f;
  }
  return pairing(v, x, ct);
}

/// Right-hand side of the lower modulus bound
/// Vol(Omega)^{1-2/n} [I(c_1) - I(c_0)] >= int_0^1 modulus_integrand(t) dt, by Gauss-Legendre in t.
inline double modulus_bound_rhs(const TensorDensityField& c0, const TensorDensityField& v, const DensityField& omega,
                                int quadrature_points = 16) {
  if (v.max_abs() == 0.0) return 0.0;
  const auto rule = gauss_legendre(quadrature_points, 0.0, 1.0);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * modulus_integrand(c0, v, omega, rule.nodes[q]);
  return s;
}

} // namespace yamabe
