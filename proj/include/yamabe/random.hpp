#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "yamabe/chart.hpp"

namespace yamabe {

/// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

/// Generator for stream `index` of a run seeded with `seed`.
inline std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index & 0xffffffffu), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Random trigonometric polynomial with modes |k_a| <= max_mode, sampled on the chart nodes and
/// scaled so that max |f| = 1. On a chart without axes this is a single value in [-1, 1].
inline std::vector<double> random_trig_field(const GridChart& chart, std::mt19937_64& rng, int max_mode = 2,
                                             int terms = 6) {
  const std::size_t axes = chart.axis_count();
  const std::size_t nodes = chart.node_count();
  if (axes == 0) return {uniform_in(rng, -1.0, 1.0)};
  std::vector<double> f(nodes, 0.0);
  std::vector<int> modes(axes);
  for (int t = 0; t < terms; ++t) {
    const double coef = uniform_in(rng, -1.0, 1.0);
    const double phase = uniform_in(rng, 0.0, 2.0 * std::numbers::pi);
    bool all_zero = true;
    for (std::size_t a = 0; a < axes; ++a) {
      modes[a] = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * max_mode + 1)) - max_mode;
      all_zero = all_zero && modes[a] == 0;
    }
    if (all_zero) modes[0] = 1;
    for (std::size_t node = 0; node < nodes; ++node) {
      double arg = phase;
      for (std::size_t a = 0; a < axes; ++a)
        arg += 2.0 * std::numbers::pi * modes[a] * chart.coordinate(node, a) / chart.periods()[a];
      f[node] += coef * std::cos(arg);
    }
  }
  double mx = 0.0;
  for (double v : f) mx = std::max(mx, std::abs(v));
  if (mx > 0.0)
    for (double& v : f) v /= mx;
  return f;
}

} // namespace yamabe
