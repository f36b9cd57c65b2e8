#pragma once

// Closed-form reference values used by the test suite. Nothing here calls into the library's
// curvature code: conformally flat metrics e^{2u} delta have textbook curvature in terms of the
// flat derivatives of u, which are evaluated analytically for trigonometric u.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "yamabe/yamabe.hpp"

namespace oracle {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// u(x) = sum_t amp_t sin(2 pi <m_t, x / P> + phase_t) with value, gradient and Hessian.
struct TrigPolynomial {
  struct Term {
    double amp;
    double phase;
    std::vector<double> k; // 2 pi m / P per axis
  };
  std::vector<Term> terms;

  double value(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.amp * std::sin(arg(t, x));
    return s;
  }
  double grad(std::span<const double> x, int i) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.amp * t.k[i] * std::cos(arg(t, x));
    return s;
  }
  double hess(std::span<const double> x, int i, int j) const {
    double s = 0.0;
    for (const auto& t : terms) s -= t.amp * t.k[i] * t.k[j] * std::sin(arg(t, x));
    return s;
  }
  std::size_t dims() const { return terms.empty() ? 0 : terms[0].k.size(); }
  double flat_laplacian(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dims(); ++i) s += hess(x, static_cast<int>(i), static_cast<int>(i));
    return s;
  }
  double grad_norm2(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dims(); ++i) {
      const double gi = grad(x, static_cast<int>(i));
      s += gi * gi;
    }
    return s;
  }

private:
  static double arg(const Term& t, std::span<const double> x) {
    double a = t.phase;
    for (std::size_t d = 0; d < t.k.size(); ++d) a += t.k[d] * x[d];
    return a;
  }
};

/// Random low-mode trigonometric polynomial on a periodic chart.
inline TrigPolynomial random_trig(const yamabe::GridChart& chart, std::mt19937_64& rng, double amplitude, int max_mode,
                                  int terms = 3) {
  std::uniform_int_distribution<int> mode(-max_mode, max_mode);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TrigPolynomial p;
  const auto dims = chart.axis_count();
  for (int t = 0; t < terms; ++t) {
    TrigPolynomial::Term term{amplitude * (0.5 + 0.5 * unit(rng)) / terms, kTwoPi * unit(rng), std::vector<double>(dims)};
    bool nonzero = false;
    for (std::size_t d = 0; d < dims; ++d) {
      const int m = mode(rng);
      nonzero = nonzero || m != 0;
      term.k[d] = kTwoPi * m / chart.periods()[d];
    }
    if (!nonzero) term.k[0] = kTwoPi / chart.periods()[0];
    p.terms.push_back(std::move(term));
  }
  return p;
}

inline yamabe::ScalarField sample(const yamabe::GridChart& chart, const TrigPolynomial& u) {
  return yamabe::ScalarField::sample(chart, [&](std::span<const double> x) { return u.value(x); });
}

/// g = e^{2u} delta.
inline yamabe::MetricField conformally_flat(const yamabe::GridChart& chart, const TrigPolynomial& u) {
  return yamabe::MetricField(yamabe::SymTensorField::sample(
      chart, [&](std::span<const double> x, int i, int j) { return i == j ? std::exp(2.0 * u.value(x)) : 0.0; }));
}

/// Gamma^k_ij of e^{2u} delta: delta_ik u_j + delta_jk u_i - delta_ij u_k.
inline double conformal_christoffel(const TrigPolynomial& u, std::span<const double> x, int k, int i, int j) {
  return (i == k ? u.grad(x, j) : 0.0) + (j == k ? u.grad(x, i) : 0.0) - (i == j ? u.grad(x, k) : 0.0);
}

/// Ric_ij of e^{2u} delta in dimension n.
inline double conformal_ricci(const TrigPolynomial& u, std::span<const double> x, int n, int i, int j) {
  const double hess_term = -(n - 2.0) * (u.hess(x, i, j) - u.grad(x, i) * u.grad(x, j));
  const double trace_term = i == j ? -(u.flat_laplacian(x) + (n - 2.0) * u.grad_norm2(x)) : 0.0;
  return hess_term + trace_term;
}

/// R of e^{2u} delta in dimension n.
inline double conformal_scalar(const TrigPolynomial& u, std::span<const double> x, int n) {
  return std::exp(-2.0 * u.value(x)) *
         (-2.0 * (n - 1.0) * u.flat_laplacian(x) - (n - 2.0) * (n - 1.0) * u.grad_norm2(x));
}

/// Max nodal error of library R against the closed form.
inline double scalar_curvature_error(const yamabe::GridChart& chart, const TrigPolynomial& u) {
  const auto g = conformally_flat(chart, u);
  const auto r = yamabe::scalar_curvature(g);
  const int n = chart.dim();
  double worst = 0.0;
  std::vector<double> x(chart.axis_count());
  for (std::size_t node = 0; node < chart.node_count(); ++node) {
    for (std::size_t a = 0; a < x.size(); ++a) x[a] = chart.coordinate(node, a);
    worst = std::max(worst, std::abs(r[node] - conformal_scalar(u, x, n)));
  }
  return worst;
}

/// Closed-form volume of the unit k-sphere, by the recursion omega_k = 2 pi / (k - 1) omega_{k-2}.
inline double unit_sphere_volume(int k) {
  double w = k % 2 == 0 ? 2.0 : 2.0 * std::numbers::pi; // omega_0 = 2 (two points), omega_1 = 2 pi
  for (int j = k % 2 == 0 ? 2 : 3; j <= k; j += 2) w *= kTwoPi / (j - 1);
  return w;
}

/// identity + amplitude * (symmetric random trig perturbation); positive definite for amplitude < 1/n.
inline yamabe::MetricField perturbed_torus(const yamabe::GridChart& chart, std::mt19937_64& rng, double amplitude,
                                           int max_mode = 1) {
  const int n = chart.dim();
  auto t = yamabe::SymTensorField::identity(chart);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto f = yamabe::random_trig_field(chart, rng, max_mode);
      for (std::size_t node = 0; node < chart.node_count(); ++node) {
        auto a = t.at(node);
        a[i * n + j] += amplitude * f[node];
        if (i != j) a[j * n + i] += amplitude * f[node];
      }
    }
  }
  return yamabe::MetricField(std::move(t));
}

/// Symmetric tensor with random trig components and the requested weight.
inline yamabe::SymTensorField random_symmetric(const yamabe::GridChart& chart, std::mt19937_64& rng,
                                               yamabe::Weight weight = {}, int max_mode = 1) {
  const int n = chart.dim();
  auto t = yamabe::SymTensorField::zero(chart, weight);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto f = yamabe::random_trig_field(chart, rng, max_mode);
      for (std::size_t node = 0; node < chart.node_count(); ++node) {
        auto a = t.at(node);
        a[i * n + j] = f[node];
        a[j * n + i] = f[node];
      }
    }
  }
  return t;
}

inline double relative_error(double got, double want) { return std::abs(got - want) / std::abs(want); }

} // namespace oracle
