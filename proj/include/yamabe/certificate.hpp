#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "yamabe/conformal.hpp"
#include "yamabe/functional.hpp"
#include "yamabe/random.hpp"

namespace yamabe {

/// Q tensors of a finite family of metrics in one conformal class, with their Gram matrix.
///
/// Two Q fields (weight 1 - 2/n each) are paired after dividing one by the reference density
/// Omega_ref (the first member's volume density), which brings the weights to the pairing total.
class QEnsemble {
public:
  /// Q fields and Gram matrix of `metrics`; every member must share the class of the first
  /// (class sections equal within `class_tol`).
  static QEnsemble assemble(const std::vector<MetricField>& metrics, double class_tol = 1e-8, int threads = 1) {
    if (metrics.empty()) throw EnsembleError(0, "ensemble needs at least one metric");
    const int n = metrics.front().dim();
    require_conformal_dim(n, "QEnsemble");
    auto split0 = conformal_split(metrics.front());
    std::vector<TensorDensityField> q;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      if (!metrics[m].chart().same_shape(metrics.front().chart()))
        throw EnsembleError(m, "chart differs from member 0");
      if (m > 0) {
        const auto split = conformal_split(metrics[m]);
        double diff = 0.0;
        for (std::size_t k = 0; k < split.c.values().size(); ++k)
          diff = std::max(diff, std::abs(split.c.values()[k] - split0.c.values()[k]));
        if (diff > class_tol)
          throw EnsembleError(m, "conformal class differs from member 0 (max |c - c0| = " + std::to_string(diff) + ")");
      }
      q.push_back(q_map(metrics[m]));
    }
    QEnsemble e(std::move(split0.c), std::move(split0.omega), std::move(q), threads);
    e.metrics_ = metrics;
    return e;
  }

  /// Ensemble built directly from Q-type fields (weight 1 - 2/n) over class section c.
  static QEnsemble from_fields(TensorDensityField c, DensityField omega_ref, std::vector<TensorDensityField> q,
                               int threads = 1) {
    if (q.empty()) throw EnsembleError(0, "ensemble needs at least one member");
    const int n = c.dim();
    require_weight(c.weight(), Weight::class_section(n), "ensemble class");
    require_weight(omega_ref.weight(), Weight{1}, "ensemble reference density");
    for (std::size_t m = 0; m < q.size(); ++m) {
      if (!q[m].chart().same_shape(c.chart())) throw EnsembleError(m, "chart differs from the class section");
      if (!(q[m].weight() == Weight::q_tensor(n)))
        throw EnsembleError(m, "member weight " + q[m].weight().str() + " is not " + Weight::q_tensor(n).str());
    }
    return QEnsemble(std::move(c), std::move(omega_ref), std::move(q), threads);
  }

  std::size_t size() const noexcept { return q_.size(); }
  int dim() const noexcept { return c_.dim(); }
  const TensorDensityField& class_section() const noexcept { return c_; }
  const DensityField& reference_density() const noexcept { return omega_ref_; }
  const std::vector<TensorDensityField>& q() const noexcept { return q_; }
  const std::vector<MetricField>& metrics() const noexcept { return metrics_; }
  double gram(std::size_t i, std::size_t j) const { return gram_[i * size() + j]; }
  const std::vector<double>& gram_matrix() const noexcept { return gram_; }

  /// <a Omega_ref^{-1}, b>_c for two Q-type fields.
  double q_inner(const TensorDensityField& a, const TensorDensityField& b) const {
    return pairing(a.times(omega_inv_), b, c_);
  }

  /// Gram entry recomputed from the raw fields (same evaluation order as the stored matrix).
  double raw_inner(std::size_t i, std::size_t j) const {
    const auto [lo, hi] = std::minmax(i, j);
    return q_inner(q_[lo], q_[hi]);
  }

  /// Pairing of a weight -2/n direction with member i.
  double pair_direction(const TensorDensityField& v, std::size_t i) const { return pairing(v, q_[i], c_); }

  /// Smallest Gram eigenvalue (Jacobi rotations); >= -1e-10 scale for a valid ensemble.
  double gram_min_eigenvalue() const {
    const std::size_t m = size();
    std::vector<double> a = gram_;
    for (int sweep = 0; sweep < 100; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t r = p + 1; r < m; ++r) off += a[p * m + r] * a[p * m + r];
      if (off < 1e-300) break;
      for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t r = p + 1; r < m; ++r) {
          const double apr = a[p * m + r];
          if (apr == 0.0) continue;
          const double theta = 0.5 * (a[r * m + r] - a[p * m + p]) / apr;
          const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
          for (std::size_t k = 0; k < m; ++k) {
            const double akp = a[k * m + p], akr = a[k * m + r];
            a[k * m + p] = cs * akp - sn * akr;
            a[k * m + r] = sn * akp + cs * akr;
          }
          for (std::size_t k = 0; k < m; ++k) {
            const double apk = a[p * m + k], ark = a[r * m + k];
            a[p * m + k] = cs * apk - sn * ark;
            a[r * m + k] = sn * apk + cs * ark;
          }
        }
      }
    }
    double lo = a[0];
    for (std::size_t p = 0; p < m; ++p) lo = std::min(lo, a[p * m + p]);
    return lo;
  }

private:
  QEnsemble(TensorDensityField c, DensityField omega_ref, std::vector<TensorDensityField> q, int threads)
      : c_(std::move(c)), omega_ref_(std::move(omega_ref)),
        omega_inv_(density_power(omega_ref_, Weight(-1))), q_(std::move(q)) {
    const std::size_t m = q_.size();
    gram_.assign(m * m, 0.0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) pairs.emplace_back(i, j);
    auto work = [&](std::size_t start, std::size_t step) {
      for (std::size_t k = start; k < pairs.size(); k += step) {
        const auto [i, j] = pairs[k];
        gram_[i * m + j] = gram_[j * m + i] = q_inner(q_[i], q_[j]);
      }
    };
    const auto pool = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(pairs.size()))));
    if (pool == 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> workers;
      for (std::size_t t = 0; t < pool; ++t) workers.emplace_back(work, t, pool);
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, gram_[i * m + i]);
    if (m > 1 && gram_min_eigenvalue() < -1e-10 * std::max(1.0, scale))
      throw EnsembleError(0, "Gram matrix is not positive semidefinite");
  }

  TensorDensityField c_;
  DensityField omega_ref_;
  DensityField omega_inv_;
  std::vector<TensorDensityField> q_;
  std::vector<MetricField> metrics_;
  std::vector<double> gram_;
};

enum class CertificateStatus { measure_found, separated, inconclusive };

inline const char* status_name(CertificateStatus s) {
  switch (s) {
  case CertificateStatus::measure_found: return "measure-found";
  case CertificateStatus::separated: return "separated";
  default: return "inconclusive";
  }
}

struct MinNormOptions {
  double tol = 1e-7;          ///< relative to max_i |Q_i|
  int max_iter = 10000;
  double gap_tol = 1e-14;     ///< stop when the Frank-Wolfe gap is below gap_tol * max |Q_i|^2
  bool record_trace = false;  ///< keep every iterate's weights
};

/// Minimum-norm point of the convex hull of m vectors known only through inner(i, j).
struct MinNormResult {
  CertificateStatus status = CertificateStatus::inconclusive;
  std::vector<double> weights;
  double residual = 0.0;        ///< |sum a_i Q_i|
  double lower_bound = 0.0;     ///< certified lower bound on the distance from 0 to the hull
  double threshold = 0.0;       ///< tol * max_i |Q_i|
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<std::vector<double>> weight_trace;
};

/// Frank-Wolfe with away steps and exact line search over the probability simplex.
template <class Inner>
MinNormResult min_norm_point(std::size_t m, Inner&& inner, const MinNormOptions& opts = {}) {
  if (m == 0) throw EnsembleError(0, "empty ensemble");
  MinNormResult out;
  std::vector<double> diag(m);
  double scale2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = inner(i, i);
    scale2 = std::max(scale2, diag[i]);
  }
  out.threshold = opts.tol * std::sqrt(scale2);
  const double thr2 = out.threshold * out.threshold;

  std::size_t start = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (diag[i] < diag[start]) start = i;
  std::vector<double> a(m, 0.0), g(m), col(m);
  a[start] = 1.0;
  for (std::size_t i = 0; i < m; ++i) g[i] = inner(start, i); // g_i = <x, Q_i>
  auto norm2 = [&] {
    std::vector<double> t(m);
    for (std::size_t i = 0; i < m; ++i) t[i] = a[i] * g[i];
    return std::max(0.0, pairwise_sum(t));
  };
  double f = norm2();

  auto record = [&] {
    out.residual_history.push_back(std::sqrt(f));
    if (opts.record_trace) out.weight_trace.push_back(a);
  };
  record();

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    std::size_t s = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (g[i] < g[s]) s = i;
    std::size_t v = m;
    for (std::size_t i = 0; i < m; ++i)
      if (a[i] > 0.0 && (v == m || g[i] > g[v])) v = i;
    const double fw_gap = f - g[s];
    const double away_gap = g[v] - f;
    if (g[s] > 0.0) out.lower_bound = std::max(out.lower_bound, g[s] / std::sqrt(f));

    if (f <= thr2) {
      out.status = CertificateStatus::measure_found;
      break;
    }
    if (fw_gap <= opts.gap_tol * scale2) {
      out.status = g[s] > 0.0 && out.lower_bound > out.threshold ? CertificateStatus::separated
                                                                 : CertificateStatus::inconclusive;
      break;
    }
    if (iter >= opts.max_iter) {
      out.status = g[s] > 0.0 && out.lower_bound > out.threshold ? CertificateStatus::separated
                                                                 : CertificateStatus::inconclusive;
      break;
    }

    if (fw_gap >= away_gap) {
      for (std::size_t i = 0; i < m; ++i) col[i] = inner(s, i);
      const double denom = f - 2.0 * g[s] + diag[s];
      const double gamma = denom > 0.0 ? std::clamp(fw_gap / denom, 0.0, 1.0) : 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        a[i] *= 1.0 - gamma;
        g[i] = (1.0 - gamma) * g[i] + gamma * col[i];
      }
      a[s] += gamma;
    } else {
      for (std::size_t i = 0; i < m; ++i) col[i] = inner(v, i);
      const double gmax = a[v] / (1.0 - a[v]);
      const double denom = f - 2.0 * g[v] + diag[v];
      double gamma = denom > 0.0 ? std::clamp(away_gap / denom, 0.0, gmax) : gmax;
      const bool drop = gamma >= gmax;
      if (drop) gamma = gmax;
      for (std::size_t i = 0; i < m; ++i) {
        a[i] *= 1.0 + gamma;
        g[i] = (1.0 + gamma) * g[i] - gamma * col[i];
      }
      a[v] -= gamma;
      if (drop) a[v] = 0.0;
    }
    double sum = 0.0;
    for (double x : a) sum += x;
    for (double& x : a) x /= sum;
    f = norm2();
    record();
  }
  out.residual = std::sqrt(f);
  out.weights = a;
  return out;
}

/// Outcome of the convex-hull test for 0 in conv{Q_i}.
struct CertificateResult {
  CertificateStatus status = CertificateStatus::inconclusive;
  std::vector<double> weights;              ///< min-norm-point weights (a probability vector)
  double residual = 0.0;                    ///< |sum a_i Q_i| in the pairing norm
  double lower_bound = 0.0;
  double threshold = 0.0;
  std::optional<TensorDensityField> direction; ///< -(sum a_i Q_i) Omega_ref^{-1}, weight -2/n (when separated)
  std::vector<double> pairings;             ///< <direction, Q_i> re-evaluated from fields
  double margin = 0.0;                      ///< max_i <direction, Q_i>
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Decide whether 0 lies in the convex hull of the ensemble's Q tensors.
inline CertificateResult hull_feasibility(const QEnsemble& ens, const MinNormOptions& opts = {}) {
  const auto mn = min_norm_point(ens.size(), [&](std::size_t i, std::size_t j) { return ens.gram(i, j); }, opts);
  CertificateResult r;
  r.status = mn.status;
  r.weights = mn.weights;
  r.residual = mn.residual;
  r.lower_bound = mn.lower_bound;
  r.threshold = mn.threshold;
  r.iterations = mn.iterations;
  r.residual_history = mn.residual_history;
  if (r.status != CertificateStatus::measure_found) {
    auto x = SymTensorField::zero(ens.class_section().chart(), Weight::q_tensor(ens.dim()));
    for (std::size_t i = 0; i < ens.size(); ++i)
      if (r.weights[i] != 0.0) x = x + ens.q()[i].scaled(r.weights[i]);
    auto v = x.scaled(-1.0).times(density_power(ens.reference_density(), Weight(-1)));
    r.margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ens.size(); ++i) {
      r.pairings.push_back(ens.pair_direction(v, i));
      r.margin = std::max(r.margin, r.pairings.back());
    }
    if (r.status == CertificateStatus::separated && !(r.margin < 0.0)) r.status = CertificateStatus::inconclusive;
    r.direction = std::move(v);
  }
  return r;
}

/// Same test from the Gram matrix alone (no direction is produced).
inline MinNormResult hull_feasibility_gram(const std::vector<double>& gram, std::size_t m,
                                           const MinNormOptions& opts = {}) {
  if (gram.size() != m * m) throw ShapeError("Gram matrix size mismatch");
  return min_norm_point(m, [&](std::size_t i, std::size_t j) { return gram[i * m + j]; }, opts);
}

/// Support of a finite measure after normalization.
struct MeasureSupport {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
};

/// Rescale to total mass 1, drop atoms below `drop_below`, rescale again.
inline MeasureSupport normalize_measure(const std::vector<double>& weights, double drop_below = 1e-14) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("normalize_measure: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("normalize_measure: all weights are zero");
  MeasureSupport out;
  double kept = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] / total < drop_below) continue;
    out.indices.push_back(i);
    out.weights.push_back(weights[i] / total);
    kept += weights[i] / total;
  }
  for (double& w : out.weights) w /= kept;
  return out;
}

struct DualSampleReport {
  int directions = 0;
  double min_max_pairing = 0.0;             ///< min over sampled v of max_i <v, Q_i>
  std::vector<double> max_pairings;         ///< per sampled direction
  std::vector<TensorDensityField> counterexamples; ///< sampled v with every pairing negative
  std::optional<double> given_direction_margin; ///< max_i <v, Q_i> for a supplied direction
};

/// Random c-trace-free direction of weight -2/n with max component 1.
inline TensorDensityField random_trace_free_direction(const TensorDensityField& c, std::mt19937_64& rng,
                                                      int max_mode = 2) {
  const int n = c.dim();
  const auto& chart = c.chart();
  auto w = SymTensorField::zero(chart, Weight::class_section(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto f = random_trig_field(chart, rng, max_mode);
      for (std::size_t node = 0; node < chart.node_count(); ++node) {
        auto m = w.at(node);
        m[i * n + j] = f[node];
        m[j * n + i] = f[node];
      }
    }
  }
  return trace_free_project(c, w);
}

/// Sample trace-free directions and record how the best of them pairs with the ensemble.
inline DualSampleReport dual_sample_check(const QEnsemble& ens, int direction_count, std::uint64_t rng_seed,
                                          const std::optional<TensorDensityField>& given = std::nullopt) {
  DualSampleReport rep;
  rep.directions = direction_count;
  rep.min_max_pairing = std::numeric_limits<double>::infinity();
  for (int d = 0; d < direction_count; ++d) {
    auto rng = seeded_stream(rng_seed, static_cast<std::uint64_t>(d));
    auto v = random_trace_free_direction(ens.class_section(), rng);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ens.size(); ++i) worst = std::max(worst, ens.pair_direction(v, i));
    rep.max_pairings.push_back(worst);
    rep.min_max_pairing = std::min(rep.min_max_pairing, worst);
    if (worst < 0.0) rep.counterexamples.push_back(std::move(v));
  }
  if (given) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ens.size(); ++i) worst = std::max(worst, ens.pair_direction(*given, i));
    rep.given_direction_margin = worst;
  }
  return rep;
}

} // namespace yamabe
