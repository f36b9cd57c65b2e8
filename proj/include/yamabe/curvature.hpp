#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "yamabe/derivatives.hpp"
#include "yamabe/fields.hpp"
#include "yamabe/integration.hpp"
#include "yamabe/linalg.hpp"

namespace yamabe {

/// Gamma^k_ij per node, stored (node, k, i, j).
class ChristoffelField {
public:
  ChristoffelField(GridChart chart, std::vector<double> values) : chart_(std::move(chart)), values_(std::move(values)) {}

  const GridChart& chart() const noexcept { return chart_; }
  int dim() const noexcept { return chart_.dim(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(std::size_t node, int k, int i, int j) const {
    const int n = dim();
    return values_[((node * n + k) * n + i) * n + j];
  }

private:
  GridChart chart_;
  std::vector<double> values_;
};

/// g^{ij} per node.
inline SymTensorField inverse_metric(const MetricField& g) {
  const int n = g.dim();
  auto inv = SymTensorField::zero(g.chart());
  linalg::Scratch l{};
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    if (linalg::cholesky(g.at(node), n, l) >= 0) throw DegenerateMetricError(node, "metric not invertible");
    linalg::inverse_from_cholesky(l, n, inv.at(node));
  }
  return inv;
}

namespace detail {

/// Closed-form Ricci tensor of the canonical model metric in its orthonormal frame.
inline std::vector<double> model_ricci_frame(const GridChart& chart) {
  const int n = chart.dim();
  std::vector<double> ric(static_cast<std::size_t>(n * n), 0.0);
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, RoundSphere>) {
          for (int i = 0; i < n; ++i) ric[i * n + i] = (n - 1) / (k.radius * k.radius);
        } else if constexpr (std::is_same_v<K, ProductCylinder>) {
          // S^1 direction first, then the S^{n-1} factor.
          for (int i = 1; i < n; ++i) ric[i * n + i] = (n - 2) / (k.sphere_radius * k.sphere_radius);
        }
      },
      chart.kind());
  return ric;
}

} // namespace detail

/// Levi-Civita connection Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij).
inline ChristoffelField christoffel(const MetricField& g) {
  require_periodic(g.chart(), "christoffel");
  const int n = g.dim();
  const auto nn = static_cast<std::size_t>(n * n);
  const std::size_t nodes = g.node_count();
  const auto ginv = inverse_metric(g);
  std::vector<std::vector<double>> dg(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) dg[a] = detail::periodic_derivative(g.tensor().values(), g.chart(), a, nn);

  std::vector<double> gamma(nodes * nn * n, 0.0);
  std::vector<double> lower(static_cast<std::size_t>(n));
  for (std::size_t node = 0; node < nodes; ++node) {
    auto gi = ginv.at(node);
    const std::size_t off = node * nn;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        // Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        for (int l = 0; l < n; ++l) {
          lower[l] = 0.5 * (dg[i][off + j * n + l] + dg[j][off + i * n + l] - dg[l][off + i * n + j]);
        }
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += gi[k * n + l] * lower[l];
          gamma[((node * n + k) * n + i) * n + j] = s;
          gamma[((node * n + k) * n + j) * n + i] = s;
        }
      }
    }
  }
  return {g.chart(), std::move(gamma)};
}

/// Ricci tensor. On grids: R_ij = d_k G^k_ij - d_(i G^k_j)k + G^k_kl G^l_ij - G^k_jl G^l_ik, with the
/// trace-derivative term symmetrized; on model charts: the closed form.
inline SymTensorField ricci(const MetricField& g) {
  const int n = g.dim();
  const auto nn = static_cast<std::size_t>(n * n);
  if (g.chart().is_model()) {
    auto ric = SymTensorField::zero(g.chart());
    const auto frame = detail::model_ricci_frame(g.chart());
    std::copy(frame.begin(), frame.end(), ric.at(0).begin());
    return ric;
  }
  const std::size_t nodes = g.node_count();
  const auto gamma = christoffel(g);
  const auto gv = gamma.values();

  // d_k Gamma^k_ij, accumulated one k-slice at a time.
  std::vector<double> div(nodes * nn, 0.0);
  std::vector<double> slice(nodes * nn), dslice(nodes * nn);
  for (int k = 0; k < n; ++k) {
    for (std::size_t node = 0; node < nodes; ++node)
      for (std::size_t ij = 0; ij < nn; ++ij) slice[node * nn + ij] = gv[(node * n + k) * nn + ij];
    detail::periodic_derivative(slice, dslice, g.chart(), k, nn);
    for (std::size_t q = 0; q < div.size(); ++q) div[q] += dslice[q];
  }

  // trace vector t_i = Gamma^k_ik and its gradient d_j t_i.
  std::vector<double> trace(nodes * n, 0.0);
  for (std::size_t node = 0; node < nodes; ++node)
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += gamma(node, k, i, k);
      trace[node * n + i] = s;
    }
  std::vector<std::vector<double>> dtrace(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) dtrace[j] = detail::periodic_derivative(trace, g.chart(), j, static_cast<std::size_t>(n));

  auto ric = SymTensorField::zero(g.chart());
  for (std::size_t node = 0; node < nodes; ++node) {
    auto r = ric.at(node);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = div[node * nn + i * n + j];
        s -= 0.5 * (dtrace[j][node * n + i] + dtrace[i][node * n + j]);
        for (int l = 0; l < n; ++l) s += trace[node * n + l] * gamma(node, l, i, j);
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) s -= gamma(node, k, j, l) * gamma(node, l, i, k);
        r[i * n + j] = s;
        r[j * n + i] = s;
      }
    }
  }
  return ric;
}

/// R = g^{ij} Ric_ij.
inline ScalarField scalar_curvature_from(const MetricField& g, const SymTensorField& ric) {
  const int n = g.dim();
  std::vector<double> r(g.node_count());
  const auto ginv = inverse_metric(g);
  for (std::size_t node = 0; node < r.size(); ++node) r[node] = linalg::trace_with(ginv.at(node), ric.at(node), n);
  return {g.chart(), std::move(r)};
}

inline ScalarField scalar_curvature(const MetricField& g) { return scalar_curvature_from(g, ricci(g)); }

/// Hess f = d_i d_j f - Gamma^k_ij d_k f.
inline SymTensorField hessian(const MetricField& g, const ScalarField& f) {
  require_periodic(g.chart(), "hessian");
  if (!g.chart().same_shape(f.chart())) throw ShapeError("hessian: chart mismatch");
  const int n = g.dim();
  const auto gamma = christoffel(g);
  std::vector<std::vector<double>> df(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) df[a] = detail::periodic_derivative(f.values(), g.chart(), a);
  auto hess = SymTensorField::zero(g.chart());
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto dij = detail::periodic_derivative(df[j], g.chart(), i);
      for (std::size_t node = 0; node < g.node_count(); ++node) {
        double s = dij[node];
        for (int k = 0; k < n; ++k) s -= gamma(node, k, i, j) * df[k][node];
        hess.at(node)[i * n + j] = s;
        hess.at(node)[j * n + i] = s;
      }
    }
  }
  return hess;
}

/// Laplace-Beltrami operator (trace of the Hessian, geometer's sign), evaluated in divergence
/// form (1/sqrt g) d_i (sqrt g g^{ij} d_j f) so that its integral against |dVol_g| telescopes.
inline ScalarField laplacian(const MetricField& g, const ScalarField& f) {
  require_periodic(g.chart(), "laplacian");
  if (!g.chart().same_shape(f.chart())) throw ShapeError("laplacian: chart mismatch");
  const auto nn = static_cast<std::size_t>(g.dim() * g.dim());
  const auto ginv = inverse_metric(g);
  const auto rho = volume_density(g);
  std::vector<double> coeff(g.node_count() * nn);
  for (std::size_t node = 0; node < g.node_count(); ++node)
    for (std::size_t k = 0; k < nn; ++k) coeff[node * nn + k] = rho[node] * ginv.values()[node * nn + k];
  std::vector<double> out(g.node_count());
  detail::divergence_form(g.chart(), coeff, rho.values(), f.values(), out);
  return {g.chart(), std::move(out)};
}

/// g^{ij} Hess_ij f; agrees with `laplacian` to fourth order.
inline ScalarField laplacian_trace_form(const MetricField& g, const ScalarField& f) {
  const auto hess = hessian(g, f);
  const auto ginv = inverse_metric(g);
  std::vector<double> out(g.node_count());
  for (std::size_t node = 0; node < out.size(); ++node) out[node] = linalg::trace_with(ginv.at(node), hess.at(node), g.dim());
  return {g.chart(), std::move(out)};
}

} // namespace yamabe
