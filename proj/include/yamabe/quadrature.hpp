#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace yamabe {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule mapped to [a, b] (Newton iteration on P_m from Chebyshev guesses).
inline QuadratureRule gauss_legendre(int m, double a = 0.0, double b = 1.0) {
  if (m < 1) throw std::invalid_argument("gauss_legendre needs at least one point");
  QuadratureRule rule{std::vector<double>(m), std::vector<double>(m)};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[m - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[m - 1 - i] = half * w;
  }
  return rule;
}

} // namespace yamabe
