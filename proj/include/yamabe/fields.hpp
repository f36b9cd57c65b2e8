#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "yamabe/chart.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/linalg.hpp"
#include "yamabe/weight.hpp"

namespace yamabe {

/// Nodal values of a density of weight alpha (alpha = 0: an ordinary function).
/// On a fixed chart a density is stored as its coordinate value; the weight is bookkeeping.
class ScalarField {
public:
  ScalarField(GridChart chart, std::vector<double> values, Weight weight = Weight{})
      : chart_(std::move(chart)), values_(std::move(values)), weight_(weight) {
    if (values_.size() != chart_.node_count()) throw ShapeError("scalar field size does not match chart");
  }

  static ScalarField constant(const GridChart& chart, double value, Weight weight = Weight{}) {
    return {chart, std::vector<double>(chart.node_count(), value), weight};
  }

  /// Samples f(x) at every node; x holds the node coordinates.
  static ScalarField sample(const GridChart& chart, const std::function<double(std::span<const double>)>& f,
                            Weight weight = Weight{}) {
    std::vector<double> v(chart.node_count());
    std::vector<double> x(chart.axis_count());
    for (std::size_t node = 0; node < v.size(); ++node) {
      for (std::size_t a = 0; a < x.size(); ++a) x[a] = chart.coordinate(node, a);
      v[node] = f(x);
    }
    return {chart, std::move(v), weight};
  }

  const GridChart& chart() const noexcept { return chart_; }
  Weight weight() const noexcept { return weight_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t node) const { return values_[node]; }
  double& operator[](std::size_t node) { return values_[node]; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

private:
  GridChart chart_;
  std::vector<double> values_;
  Weight weight_;
};

using DensityField = ScalarField;

/// Sampled section of Sym^2(T*M) (x) |Lambda^n|^alpha; full n x n storage per node, row-major.
class SymTensorField {
public:
  SymTensorField(GridChart chart, std::vector<double> values, Weight weight = Weight{})
      : chart_(std::move(chart)), values_(std::move(values)), weight_(weight) {
    const auto n = static_cast<std::size_t>(chart_.dim());
    if (values_.size() != chart_.node_count() * n * n) throw ShapeError("tensor field size does not match chart");
  }

  static SymTensorField zero(const GridChart& chart, Weight weight = Weight{}) {
    const auto n = static_cast<std::size_t>(chart.dim());
    return {chart, std::vector<double>(chart.node_count() * n * n, 0.0), weight};
  }

  static SymTensorField identity(const GridChart& chart, double scale = 1.0, Weight weight = Weight{}) {
    auto t = zero(chart, weight);
    const int n = chart.dim();
    for (std::size_t node = 0; node < chart.node_count(); ++node)
      for (int i = 0; i < n; ++i) t.at(node)[i * n + i] = scale;
    return t;
  }

  /// Samples f(x, i, j) for i <= j and mirrors.
  static SymTensorField sample(const GridChart& chart,
                               const std::function<double(std::span<const double>, int, int)>& f,
                               Weight weight = Weight{}) {
    auto t = zero(chart, weight);
    const int n = chart.dim();
    std::vector<double> x(chart.axis_count());
    for (std::size_t node = 0; node < chart.node_count(); ++node) {
      for (std::size_t a = 0; a < x.size(); ++a) x[a] = chart.coordinate(node, a);
      auto m = t.at(node);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double v = f(x, i, j);
          m[i * n + j] = v;
          m[j * n + i] = v;
        }
    }
    return t;
  }

  const GridChart& chart() const noexcept { return chart_; }
  int dim() const noexcept { return chart_.dim(); }
  Weight weight() const noexcept { return weight_; }
  std::size_t node_count() const noexcept { return chart_.node_count(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::span<const double> at(std::size_t node) const {
    const auto nn = static_cast<std::size_t>(dim() * dim());
    return std::span<const double>(values_).subspan(node * nn, nn);
  }
  std::span<double> at(std::size_t node) {
    const auto nn = static_cast<std::size_t>(dim() * dim());
    return std::span<double>(values_).subspan(node * nn, nn);
  }

  double operator()(std::size_t node, int i, int j) const { return values_[node * dim() * dim() + i * dim() + j]; }

  /// Same components reinterpreted with a different weight.
  SymTensorField with_weight(Weight w) const { return {chart_, values_, w}; }

  /// Pointwise product with a density field; weights add.
  SymTensorField times(const ScalarField& rho) const {
    if (!chart_.same_shape(rho.chart())) throw ShapeError("tensor/density chart mismatch");
    auto out = *this;
    out.weight_ = weight_ + rho.weight();
    const auto nn = static_cast<std::size_t>(dim() * dim());
    for (std::size_t node = 0; node < node_count(); ++node)
      for (std::size_t k = 0; k < nn; ++k) out.values_[node * nn + k] *= rho[node];
    return out;
  }

  SymTensorField scaled(double s) const {
    auto out = *this;
    for (double& v : out.values_) v *= s;
    return out;
  }

  friend SymTensorField operator+(const SymTensorField& a, const SymTensorField& b) {
    check_compatible(a, b);
    auto out = a;
    for (std::size_t k = 0; k < out.values_.size(); ++k) out.values_[k] += b.values_[k];
    return out;
  }

  friend SymTensorField operator-(const SymTensorField& a, const SymTensorField& b) {
    check_compatible(a, b);
    auto out = a;
    for (std::size_t k = 0; k < out.values_.size(); ++k) out.values_[k] -= b.values_[k];
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

private:
  static void check_compatible(const SymTensorField& a, const SymTensorField& b) {
    if (!a.chart_.same_shape(b.chart_)) throw ShapeError("tensor chart mismatch");
    require_weight(b.weight_, a.weight_, "tensor sum");
  }

  GridChart chart_;
  std::vector<double> values_;
  Weight weight_;
};

using TensorDensityField = SymTensorField;

/// A Riemannian metric g: symmetric, positive definite at every node (checked on construction).
///
/// On a model chart the metric must be a constant multiple s * I of the model's canonical
/// metric, written in its orthonormal frame; curvature is then taken from closed forms.
class MetricField {
public:
  explicit MetricField(SymTensorField components) : g_(std::move(components)) {
    require_weight(g_.weight(), Weight{}, "metric");
    validate();
  }

  /// The canonical metric of a chart: delta_ij on a grid, the model metric otherwise.
  static MetricField canonical(const GridChart& chart, double scale = 1.0) {
    return MetricField(SymTensorField::identity(chart, scale));
  }

  const SymTensorField& tensor() const noexcept { return g_; }
  const GridChart& chart() const noexcept { return g_.chart(); }
  int dim() const noexcept { return g_.dim(); }
  std::size_t node_count() const noexcept { return g_.node_count(); }
  std::span<const double> at(std::size_t node) const { return g_.at(node); }
  double operator()(std::size_t node, int i, int j) const { return g_(node, i, j); }

  /// Homothety factor s when the metric is s times the canonical model metric.
  double model_scale() const { return g_(0, 0, 0); }

  MetricField scaled(double s) const { return MetricField(g_.scaled(s)); }

private:
  void validate() const {
    const int n = dim();
    if (n > kMaxDim) throw ShapeError("dimension exceeds supported maximum");
    linalg::Scratch l{};
    for (std::size_t node = 0; node < node_count(); ++node) {
      auto m = at(node);
      double scale = 0.0;
      for (double v : m) {
        if (!std::isfinite(v)) throw DegenerateMetricError(node, "non-finite component");
        scale = std::max(scale, std::abs(v));
      }
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (std::abs(m[i * n + j] - m[j * n + i]) > 1e-12 * scale)
            throw DegenerateMetricError(node, "components not symmetric");
      const int bad = linalg::cholesky(m, n, l);
      if (bad >= 0) throw DegenerateMetricError(node, "leading principal minor " + std::to_string(bad + 1) + " not positive");
    }
    if (chart().is_model()) {
      if (chart().axis_count() != 0) throw UnsupportedChartError("metrics on model charts carry no sampled axes");
      const double s = g_(0, 0, 0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (std::abs(g_(0, i, j) - (i == j ? s : 0.0)) > 1e-12 * s)
            throw UnsupportedChartError("model-chart metrics must be homothetic to the model metric");
    }
  }

  SymTensorField g_;
};

} // namespace yamabe
