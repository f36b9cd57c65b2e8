#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "yamabe/errors.hpp"

namespace yamabe {

/// Volume of the unit k-sphere S^k in R^{k+1}.
inline double sphere_volume(int k) {
  const double half = 0.5 * (k + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// Round-sphere value n(n-1) omega_n^{2/n}; upper bound for every Yamabe constant in dimension n.
inline double yamabe_sphere_constant(int n) {
  return n * (n - 1) * std::pow(sphere_volume(n), 2.0 / n);
}

/// The same constant through the Gamma-function (Sobolev constant) route:
/// 4n(n-1) (Gamma(n/2) Gamma(n/2+1) omega_{n-1} / Gamma(n+1))^{2/n}.
inline double yamabe_sphere_constant_gamma_form(int n) {
  const double inner =
      std::tgamma(0.5 * n) * std::tgamma(0.5 * n + 1.0) * sphere_volume(n - 1) / std::tgamma(n + 1.0);
  return 4.0 * n * (n - 1) * std::pow(inner, 2.0 / n);
}

struct PeriodicGrid {};
struct RoundSphere {
  double radius = 1.0;
};
/// S^1(length) x S^{n-1}(sphere_radius).
struct ProductCylinder {
  double length = 1.0;
  double sphere_radius = 1.0;
};
struct FlatTorus {
  std::vector<double> periods;
};

using ChartKind = std::variant<PeriodicGrid, RoundSphere, ProductCylinder, FlatTorus>;

/// A chart: either a periodic structured grid on an n-torus, or a closed-form model geometry.
///
/// Model charts carry no sampled axes except the product cylinder, which may sample its S^1
/// factor for conformal factors depending on the circle coordinate only. A chart with no axes
/// has exactly one "node": fields on it hold the homogeneous value in an orthonormal frame.
class GridChart {
public:
  static GridChart periodic(int dim, std::vector<int> resolution, std::vector<double> periods) {
    GridChart c;
    c.dim_ = dim;
    c.resolution_ = std::move(resolution);
    c.period_ = std::move(periods);
    c.kind_ = PeriodicGrid{};
    if (static_cast<int>(c.resolution_.size()) != dim || static_cast<int>(c.period_.size()) != dim) {
      throw ShapeError("periodic chart needs one resolution and one period per axis");
    }
    c.validate();
    return c;
  }

  static GridChart periodic(int dim, int resolution, double period = 1.0) {
    return periodic(dim, std::vector<int>(dim, resolution), std::vector<double>(dim, period));
  }

  static GridChart round_sphere(int dim, double radius = 1.0) {
    GridChart c;
    c.dim_ = dim;
    c.kind_ = RoundSphere{radius};
    c.validate();
    return c;
  }

  /// Product cylinder; `samples > 0` adds a periodic axis along the S^1 factor.
  static GridChart product_cylinder(int dim, double length, double sphere_radius = 1.0, int samples = 0) {
    GridChart c;
    c.dim_ = dim;
    c.kind_ = ProductCylinder{length, sphere_radius};
    if (samples > 0) {
      c.resolution_ = {samples};
      c.period_ = {length};
    }
    c.validate();
    return c;
  }

  static GridChart flat_torus(std::vector<double> periods) {
    GridChart c;
    c.dim_ = static_cast<int>(periods.size());
    c.kind_ = FlatTorus{std::move(periods)};
    c.validate();
    return c;
  }

  int dim() const noexcept { return dim_; }
  const ChartKind& kind() const noexcept { return kind_; }
  bool is_periodic_grid() const noexcept { return std::holds_alternative<PeriodicGrid>(kind_); }
  bool is_model() const noexcept { return !is_periodic_grid(); }

  std::size_t axis_count() const noexcept { return resolution_.size(); }
  const std::vector<int>& resolution() const noexcept { return resolution_; }
  const std::vector<double>& periods() const noexcept { return period_; }
  double spacing(std::size_t axis) const { return period_.at(axis) / resolution_.at(axis); }

  std::size_t node_count() const noexcept {
    std::size_t count = 1;
    for (int r : resolution_) count *= static_cast<std::size_t>(r);
    return count;
  }

  /// Stride (in nodes) of a unit step along `axis`; axis 0 is the slowest index.
  std::size_t stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t b = axis + 1; b < resolution_.size(); ++b) s *= static_cast<std::size_t>(resolution_[b]);
    return s;
  }

  /// Coordinate position of `node` along `axis`.
  double coordinate(std::size_t node, std::size_t axis) const {
    const auto idx = (node / stride(axis)) % static_cast<std::size_t>(resolution_[axis]);
    return static_cast<double>(idx) * spacing(axis);
  }

  /// Coordinate measure of the whole chart: product of periods on a grid, the canonical
  /// Riemannian volume of the model otherwise (its frame density is 1).
  double coordinate_volume() const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PeriodicGrid>) {
            double v = 1.0;
            for (double p : period_) v *= p;
            return v;
          } else if constexpr (std::is_same_v<K, RoundSphere>) {
            return sphere_volume(dim_) * std::pow(k.radius, dim_);
          } else if constexpr (std::is_same_v<K, ProductCylinder>) {
            return k.length * sphere_volume(dim_ - 1) * std::pow(k.sphere_radius, dim_ - 1);
          } else {
            double v = 1.0;
            for (double p : k.periods) v *= p;
            return v;
          }
        },
        kind_);
  }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PeriodicGrid>) return "periodic-grid";
          else if constexpr (std::is_same_v<K, RoundSphere>) return "round-sphere";
          else if constexpr (std::is_same_v<K, ProductCylinder>) return "product-cylinder";
          else return "flat-torus";
        },
        kind_);
  }

  bool same_shape(const GridChart& other) const {
    return dim_ == other.dim_ && resolution_ == other.resolution_ && period_ == other.period_ &&
           kind_.index() == other.kind_.index();
  }

  friend bool operator==(const GridChart& a, const GridChart& b) {
    if (!a.same_shape(b)) return false;
    return std::visit(
        [&](const auto& ka) {
          using K = std::decay_t<decltype(ka)>;
          const auto& kb = std::get<K>(b.kind_);
          if constexpr (std::is_same_v<K, PeriodicGrid>) return true;
          else if constexpr (std::is_same_v<K, RoundSphere>) return ka.radius == kb.radius;
          else if constexpr (std::is_same_v<K, ProductCylinder>)
            return ka.length == kb.length && ka.sphere_radius == kb.sphere_radius;
          else return ka.periods == kb.periods;
        },
        a.kind_);
  }

private:
  GridChart() = default;

  void validate() const {
    if (dim_ < 2) throw ShapeError("chart dimension must be at least 2");
    for (std::size_t a = 0; a < resolution_.size(); ++a) {
      if (resolution_[a] < 8) throw ShapeError("resolution per axis must be at least 8");
      if (resolution_[a] % 2 != 0) throw ShapeError("resolution per axis must be even");
      if (!(period_[a] > 0.0)) throw ShapeError("periods must be positive");
    }
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, RoundSphere>) {
            if (!(k.radius > 0.0)) throw ShapeError("sphere radius must be positive");
          } else if constexpr (std::is_same_v<K, ProductCylinder>) {
            if (!(k.length > 0.0) || !(k.sphere_radius > 0.0))
              throw ShapeError("cylinder length and sphere radius must be positive");
          } else if constexpr (std::is_same_v<K, FlatTorus>) {
            for (double p : k.periods)
              if (!(p > 0.0)) throw ShapeError("torus periods must be positive");
          }
        },
        kind_);
  }

  int dim_ = 0;
  std::vector<int> resolution_;
  std::vector<double> period_;
  ChartKind kind_;
};

inline void require_periodic(const GridChart& chart, const char* what) {
  if (!chart.is_periodic_grid()) {
    throw UnsupportedChartError(std::string(what) + " needs a periodic-grid chart, got " + chart.kind_name());
  }
}

} // namespace yamabe
