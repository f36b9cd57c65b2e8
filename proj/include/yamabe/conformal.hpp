#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "yamabe/curvature.hpp"
#include "yamabe/fields.hpp"
#include "yamabe/integration.hpp"
#include "yamabe/linalg.hpp"

namespace yamabe {

/// g <-> (Omega, c): Omega = |dVol_g| (weight 1), c = g |dVol_g|^{-2/n} (weight -2/n, det c = 1).
struct ConformalSplit {
  DensityField omega;
  TensorDensityField c;
};

inline void require_conformal_dim(int n, const char* what) {
  if (n < 3) throw DomainError(std::string(what) + ": conformal operations need dimension >= 3");
}

/// max_node |det c - 1|.
inline double class_determinant_defect(const TensorDensityField& c) {
  const int n = c.dim();
  double worst = 0.0;
  for (std::size_t node = 0; node < c.node_count(); ++node)
    worst = std::max(worst, std::abs(linalg::det_general(c.at(node), n) - 1.0));
  return worst;
}

inline ConformalSplit conformal_split(const MetricField& g) {
  const int n = g.dim();
  auto omega = volume_density(g);
  auto c = g.tensor().times(density_power(omega, Weight::class_section(n)));
  return {std::move(omega), std::move(c)};
}

/// Omega^{2/n} c.
inline MetricField recombine(const DensityField& omega, const TensorDensityField& c) {
  const int n = c.dim();
  require_weight(omega.weight(), Weight{1}, "recombine density");
  require_weight(c.weight(), Weight::class_section(n), "recombine class");
  const double defect = class_determinant_defect(c);
  if (defect > 1e-9) throw InvalidClassError("class section has det != 1 (defect " + std::to_string(defect) + ")");
  return MetricField(c.times(density_power(omega, Weight(2, n))));
}

inline MetricField recombine(const ConformalSplit& s) { return recombine(s.omega, s.c); }

/// phi^{4/(n-2)} g.
inline MetricField apply_conformal_factor(const MetricField& g, const ScalarField& phi) {
  const int n = g.dim();
  require_conformal_dim(n, "apply_conformal_factor");
  if (!g.chart().same_shape(phi.chart())) throw ShapeError("apply_conformal_factor: chart mismatch");
  require_weight(phi.weight(), Weight{}, "conformal factor");
  const double e = 4.0 / (n - 2);
  auto t = g.tensor();
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    if (!(phi[node] > 0.0)) throw DomainError("conformal factor not positive at node " + std::to_string(node));
    const double f = std::pow(phi[node], e);
    for (std::size_t k = 0; k < nn; ++k) t.values()[node * nn + k] *= f;
  }
  return MetricField(std::move(t));
}

/// Pointwise inverse of a positive-definite tensor section (weight negates).
inline SymTensorField inverse_section(const SymTensorField& c) {
  const int n = c.dim();
  auto inv = SymTensorField::zero(c.chart(), -c.weight());
  linalg::Scratch l{};
  for (std::size_t node = 0; node < c.node_count(); ++node) {
    if (linalg::cholesky(c.at(node), n, l) >= 0) throw DegenerateMetricError(node, "section not positive definite");
    linalg::inverse_from_cholesky(l, n, inv.at(node));
  }
  return inv;
}

/// tr_c w = c^{ij} w_ij.
inline ScalarField trace_with(const SymTensorField& c, const SymTensorField& w) {
  if (!c.chart().same_shape(w.chart())) throw ShapeError("trace: chart mismatch");
  const auto cinv = inverse_section(c);
  std::vector<double> tr(c.node_count());
  for (std::size_t node = 0; node < tr.size(); ++node) tr[node] = linalg::trace_with(cinv.at(node), w.at(node), c.dim());
  return {c.chart(), std::move(tr), w.weight() - c.weight()};
}

/// w - (1/n)(tr_c w) c; `c` is a metric (weight 0) or a class section (weight -2/n).
inline SymTensorField trace_free_project(const SymTensorField& c, const SymTensorField& w) {
  const int n = c.dim();
  if (!(c.weight() == Weight{}) && !(c.weight() == Weight::class_section(n))) {
    throw WeightError("trace_free_project: reference must have weight 0 or -2/n, got " + c.weight().str());
  }
  const auto tr = trace_with(c, w);
  auto out = w;
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < c.node_count(); ++node)
    for (std::size_t k = 0; k < nn; ++k) out.values()[node * nn + k] -= tr[node] / n * c.values()[node * nn + k];
  return out;
}

/// Canonical pairing of v and w with weight(v) + weight(w) = 1 - 4/n, contracted with a
/// class section c (weight -2/n):  integral of c^{ia} c^{jb} v_ij w_ab.
inline double pairing(const SymTensorField& v, const SymTensorField& w, const TensorDensityField& c) {
  const int n = c.dim();
  require_weight(c.weight(), Weight::class_section(n), "pairing class");
  require_weight(v.weight() + w.weight(), Weight::pairing_total(n), "pairing");
  if (!v.chart().same_shape(w.chart()) || !v.chart().same_shape(c.chart())) throw ShapeError("pairing: chart mismatch");
  const auto cinv = inverse_section(c);
  std::vector<double> density(c.node_count());
  for (std::size_t node = 0; node < density.size(); ++node)
    density[node] = linalg::contract(cinv.at(node), v.at(node), w.at(node), n);
  return pairwise_sum(density) * cell_volume(c.chart());
}

/// Same pairing computed through a representative metric g in the class:
/// integral of g(v, w) |dVol_g|^{4/n}.
inline double pairing(const SymTensorField& v, const SymTensorField& w, const MetricField& representative) {
  const int n = representative.dim();
  require_weight(v.weight() + w.weight(), Weight::pairing_total(n), "pairing");
  if (!v.chart().same_shape(w.chart()) || !v.chart().same_shape(representative.chart()))
    throw ShapeError("pairing: chart mismatch");
  const auto ginv = inverse_metric(representative);
  const auto rho = density_power(volume_density(representative), Weight(4, n));
  std::vector<double> density(representative.node_count());
  for (std::size_t node = 0; node < density.size(); ++node)
    density[node] = linalg::contract(ginv.at(node), v.at(node), w.at(node), n) * rho[node];
  return pairwise_sum(density) * cell_volume(representative.chart());
}

namespace detail {

/// det(c0 + t v) per node, requiring positive definiteness along the way.
inline std::vector<double> path_determinants(const TensorDensityField& c0, const TensorDensityField& v, double t,
                                             SymTensorField& sum) {
  const int n = c0.dim();
  require_weight(c0.weight(), Weight::class_section(n), "class path base");
  require_weight(v.weight(), Weight::class_section(n), "class path direction");
  sum = c0 + v.scaled(t);
  std::vector<double> det(c0.node_count());
  linalg::Scratch l{};
  for (std::size_t node = 0; node < det.size(); ++node) {
    if (linalg::cholesky(sum.at(node), n, l) >= 0) {
      throw PathRangeError("c0 + t v not positive definite at node " + std::to_string(node) + " (t = " +
                           std::to_string(t) + ")");
    }
    det[node] = linalg::det_from_cholesky(l, n);
  }
  return det;
}

} // namespace detail

/// c_t = (c0 + t v) / det(c0 + t v)^{1/n}.
inline TensorDensityField class_path(const TensorDensityField& c0, const TensorDensityField& v, double t) {
  const int n = c0.dim();
  SymTensorField sum = c0;
  const auto det = detail::path_determinants(c0, v, t, sum);
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < det.size(); ++node) {
    const double f = std::pow(det[node], -1.0 / n);
    for (std::size_t k = 0; k < nn; ++k) sum.values()[node * nn + k] *= f;
  }
  return sum;
}

/// d c_t / dt = det(c0 + t v)^{-1/n} [v - (1/n)(tr_{c_t} v) c_t].
inline TensorDensityField path_velocity(const TensorDensityField& c0, const TensorDensityField& v, double t) {
  const int n = c0.dim();
  SymTensorField sum = c0;
  const auto det = detail::path_determinants(c0, v, t, sum);
  const auto ct = class_path(c0, v, t);
  auto proj = trace_free_project(ct, v);
  const auto nn = static_cast<std::size_t>(n * n);
  for (std::size_t node = 0; node < det.size(); ++node) {
    const double f = std::pow(det[node], -1.0 / n);
    for (std::size_t k = 0; k < nn; ++k) proj.values()[node * nn + k] *= f;
  }
  return proj;
}

} // namespace yamabe
