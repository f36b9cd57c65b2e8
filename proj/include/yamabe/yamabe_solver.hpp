#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "yamabe/conformal.hpp"
#include "yamabe/curvature.hpp"
#include "yamabe/diagnostics.hpp"
#include "yamabe/integration.hpp"
#include "yamabe/random.hpp"
#include "yamabe/spectral.hpp"

namespace yamabe {

/// A discretized conformal-Laplacian problem  L phi = -a Lap phi + R phi  on a sampled periodic domain.
///
/// `weights` are the per-node measures dV of the background metric; `apply_laplacian` must be
/// symmetric with respect to them (so that the discrete energy has an exact gradient).
template <class P>
concept ConformalProblem = requires(const P& p, std::span<const double> in, std::span<double> out) {
  { p.size() } -> std::convertible_to<std::size_t>;
  { p.dim() } -> std::convertible_to<int>;
  { p.weights() } -> std::convertible_to<std::span<const double>>;
  { p.background_curvature() } -> std::convertible_to<std::span<const double>>;
  p.apply_laplacian(in, out);
  p.precondition(in, out);
};

/// Conformal class of a metric on a periodic grid.
class GridConformalProblem {
public:
  explicit GridConformalProblem(const MetricField& g0)
      : chart_(g0.chart()), n_(g0.dim()), nodes_(g0.node_count()) {
    require_periodic(chart_, "GridConformalProblem");
    require_conformal_dim(n_, "GridConformalProblem");
    const auto rho = volume_density(g0);
    const double cell = cell_volume(chart_);
    const auto r = scalar_curvature(g0);
    const auto ginv = inverse_metric(g0);
    weights_.resize(nodes_);
    rho_.assign(rho.values().begin(), rho.values().end());
    curvature_.assign(r.values().begin(), r.values().end());
    coeff_.resize(nodes_ * n_ * n_);
    std::vector<double> mean_diag(n_, 0.0);
    for (std::size_t node = 0; node < nodes_; ++node) {
      weights_[node] = rho[node] * cell;
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) coeff_[(node * n_ + i) * n_ + j] = rho[node] * ginv(node, i, j);
        mean_diag[i] += ginv(node, i, i) / static_cast<double>(nodes_);
      }
    }
    const double a = 4.0 * (n_ - 1) / (n_ - 2);
    std::vector<double> axis(n_);
    double pmax = 0.0, dmin = mean_diag[0];
    for (int i = 0; i < n_; ++i) {
      axis[i] = a * mean_diag[i];
      pmax = std::max(pmax, chart_.periods()[i]);
      dmin = std::min(dmin, mean_diag[i]);
    }
    const double shift = a * dmin * std::pow(2.0 * std::numbers::pi / pmax, 2);
    precond_.emplace(chart_.resolution(), chart_.periods(), axis, shift);
  }

  std::size_t size() const noexcept { return nodes_; }
  int dim() const noexcept { return n_; }
  const GridChart& chart() const noexcept { return chart_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> background_curvature() const noexcept { return curvature_; }

  /// (1/sqrt g) D_i (sqrt g g^{ij} D_j phi).
  void apply_laplacian(std::span<const double> phi, std::span<double> out) const {
    detail::divergence_form(chart_, coeff_, rho_, phi, out);
  }

  void precondition(std::span<const double> in, std::span<double> out) const { precond_->apply(in, out); }

private:
  GridChart chart_;
  int n_;
  std::size_t nodes_;
  std::vector<double> weights_;
  std::vector<double> rho_;
  std::vector<double> curvature_;
  std::vector<double> coeff_;
  std::optional<SpectralPreconditioner> precond_;
};

/// Conformal factors u(t) on S^1(L) x S^{n-1}(r) depending on the circle coordinate only.
class CylinderConformalProblem {
public:
  CylinderConformalProblem(int n, double length, int samples, double sphere_radius = 1.0)
      : chart_(GridChart::product_cylinder(n, length, sphere_radius, samples)), n_(n) {
    require_conformal_dim(n_, "CylinderConformalProblem");
    const double cell = cell_volume(chart_);
    weights_.assign(chart_.node_count(), cell);
    unit_.assign(chart_.node_count(), 1.0);
    curvature_.assign(chart_.node_count(), (n - 1.0) * (n - 2.0) / (sphere_radius * sphere_radius));
    const double a = 4.0 * (n_ - 1) / (n_ - 2);
    const double shift = a * std::pow(2.0 * std::numbers::pi / length, 2);
    precond_.emplace(chart_.resolution(), chart_.periods(), std::vector<double>{a}, shift);
  }

  std::size_t size() const noexcept { return chart_.node_count(); }
  int dim() const noexcept { return n_; }
  const GridChart& chart() const noexcept { return chart_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> background_curvature() const noexcept { return curvature_; }

  void apply_laplacian(std::span<const double> u, std::span<double> out) const {
    detail::divergence_form(chart_, unit_, unit_, u, out);
  }

  void precondition(std::span<const double> in, std::span<double> out) const { precond_->apply(in, out); }

private:
  GridChart chart_;
  int n_;
  std::vector<double> weights_;
  std::vector<double> curvature_;
  std::vector<double> unit_;
  std::optional<SpectralPreconditioner> precond_;
};

struct SolverOptions {
  double tol = 1e-8;         ///< stop when max |R - lambda| <= tol
  int max_iter = 5000;
  double armijo = 1e-4;      ///< sufficient-decrease constant
  double dedup_tol = 1e-3;   ///< relative L2 distance below which multi-start solutions merge
  int threads = 1;           ///< concurrent seeds in multi_start
  /// Subcritical exponent continuation p_k -> (n+2)/(n-2); off by default.
  bool continuation = false;
  std::vector<double> continuation_offsets = {0.5, 0.2, 0.05};
};

/// Outcome of a conformal-factor descent on a discrete problem.
struct DescentResult {
  std::vector<double> phi;
  double lambda = 0.0;   ///< achieved (mean) scalar curvature; equals the energy at unit volume
  double quotient = 0.0; ///< discrete Yamabe energy E(phi) = Q(phi^{4/(n-2)} g)
  double residual = 0.0; ///< max |R(phi^{4/(n-2)} g) - lambda|, unclipped
  double volume = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> quotient_history; ///< energy of each accepted iterate
};

namespace detail {

template <ConformalProblem P>
class YamabeEnergy {
public:
  YamabeEnergy(const P& problem, double exponent)
      : problem_(problem), q_(exponent), a_(4.0 * (problem.dim() - 1) / (problem.dim() - 2)) {}

  double exponent() const noexcept { return q_; }

  /// L phi = -a Lap phi + R phi.
  void apply_operator(std::span<const double> phi, std::span<double> out) const {
    problem_.apply_laplacian(phi, out);
    const auto r = problem_.background_curvature();
    for (std::size_t k = 0; k < phi.size(); ++k) out[k] = -a_ * out[k] + r[k] * phi[k];
  }

  double weighted_dot(std::span<const double> x, std::span<const double> y) const {
    std::vector<double> t(x.size());
    const auto w = problem_.weights();
    for (std::size_t k = 0; k < x.size(); ++k) t[k] = w[k] * x[k] * y[k];
    return pairwise_sum(t);
  }

  double power_integral(std::span<const double> phi) const {
    std::vector<double> t(phi.size());
    const auto w = problem_.weights();
    for (std::size_t k = 0; k < phi.size(); ++k) t[k] = w[k] * std::pow(phi[k], q_ + 1.0);
    return pairwise_sum(t);
  }

  /// Energy change E(phi + tau d) - E(phi), evaluated without cancellation.
  double energy_change(double numer, double power, std::span<const double> lphi, std::span<const double> phi,
                       std::span<const double> d, std::span<const double> ld, double tau) const {
    const double dnum = 2.0 * tau * weighted_dot(d, lphi) + tau * tau * weighted_dot(d, ld);
    std::vector<double> t(phi.size());
    const auto w = problem_.weights();
    for (std::size_t k = 0; k < phi.size(); ++k)
      t[k] = w[k] * std::pow(phi[k], q_ + 1.0) * std::expm1((q_ + 1.0) * std::log1p(tau * d[k] / phi[k]));
    const double dpow = pairwise_sum(t);
    const double beta = 2.0 / (q_ + 1.0);
    const double new_power = power + dpow;
    return dnum * std::pow(new_power, -beta) + numer * std::pow(power, -beta) * std::expm1(-beta * std::log1p(dpow / power));
  }

  const P& problem() const noexcept { return problem_; }

private:
  const P& problem_;
  double q_;
  double a_;
};

template <ConformalProblem P>
void normalize_volume(const YamabeEnergy<P>& energy, std::vector<double>& phi) {
  const double s = std::pow(energy.power_integral(phi), -1.0 / (energy.exponent() + 1.0));
  for (double& v : phi) v *= s;
}

template <ConformalProblem P>
DescentResult descend_at_exponent(const P& problem, std::vector<double> phi, double exponent, const SolverOptions& opts,
                                  int iteration_budget) {
  const YamabeEnergy<P> energy(problem, exponent);
  const std::size_t m = problem.size();
  const auto w = problem.weights();
  double wbar = 0.0;
  for (double x : w) wbar += x / static_cast<double>(m);

  normalize_volume(energy, phi);
  std::vector<double> lphi(m), grad(m), wg(m), dir(m), ldir(m), trial(m);
  DescentResult res;
  double tau = 1.0;

  auto evaluate = [&](double& numer, double& power) {
    energy.apply_operator(phi, lphi);
    numer = energy.weighted_dot(phi, lphi);
    power = energy.power_integral(phi);
  };

  double numer = 0.0, power = 0.0;
  evaluate(numer, power);
  double e = numer / std::pow(power, 2.0 / (exponent + 1.0));
  res.quotient_history.push_back(e);

  for (int iter = 0;; ++iter) {
    const double lambda = numer / power;
    double resid = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      grad[k] = lphi[k] - lambda * std::pow(phi[k], exponent);
      resid = std::max(resid, std::abs(lphi[k] / std::pow(phi[k], exponent) - lambda));
    }
    res.iterations = iter;
    res.residual = resid;
    res.lambda = lambda;
    res.quotient = e;
    if (resid <= opts.tol) {
      res.converged = true;
      res.message = "converged";
      break;
    }
    if (iter >= iteration_budget) {
      res.message = "iteration cap reached";
      break;
    }
    for (std::size_t k = 0; k < m; ++k) wg[k] = w[k] * grad[k] / wbar;
    problem.precondition(wg, dir);
    for (double& v : dir) v = -v;
    // directional derivative of E along dir (up to the positive factor 2 / P^{2/(q+1)})
    const double slope = 2.0 * energy.weighted_dot(grad, dir) / std::pow(power, 2.0 / (exponent + 1.0));
    if (!(slope < 0.0)) {
      res.message = "no descent direction";
      break;
    }
    energy.apply_operator(dir, ldir);

    tau = std::min(1.0, 2.0 * tau);
    bool accepted = false;
    while (tau > 1e-14) {
      bool positive = true;
      for (std::size_t k = 0; k < m; ++k) {
        if (!(phi[k] + tau * dir[k] > 0.0)) {
          positive = false;
          break;
        }
      }
      if (positive) {
        const double de = energy.energy_change(numer, power, lphi, phi, dir, ldir, tau);
        if (de <= opts.armijo * tau * slope) {
          accepted = true;
          break;
        }
      }
      tau *= 0.5;
    }
    if (!accepted) {
      res.message = "line search failed (energy increase not recoverable)";
      break;
    }
    for (std::size_t k = 0; k < m; ++k) phi[k] += tau * dir[k];
    normalize_volume(energy, phi);
    evaluate(numer, power);
    e = numer / std::pow(power, 2.0 / (exponent + 1.0));
    res.quotient_history.push_back(e);
  }
  res.volume = energy.power_integral(phi);
  res.phi = std::move(phi);
  return res;
}

} // namespace detail

/// Volume-normalized projected (preconditioned) gradient descent of the Yamabe energy
///   E(phi) = int phi L phi dV / (int phi^{2n/(n-2)} dV)^{(n-2)/n}
/// with Armijo backtracking; phi is renormalized to unit volume of phi^{4/(n-2)} g after each step.
template <ConformalProblem P>
DescentResult descend(const P& problem, std::vector<double> phi, const SolverOptions& opts = {}) {
  const int n = problem.dim();
  const double critical = (n + 2.0) / (n - 2.0);
  for (double v : phi)
    if (!(v > 0.0)) throw DomainError("initial conformal factor must be positive");
  int used = 0;
  if (opts.continuation) {
    for (double off : opts.continuation_offsets) {
      auto stage = detail::descend_at_exponent(problem, std::move(phi), critical - off, opts, opts.max_iter - used);
      used += stage.iterations;
      phi = std::move(stage.phi);
    }
  }
  auto res = detail::descend_at_exponent(problem, std::move(phi), critical, opts, std::max(0, opts.max_iter - used));
  res.iterations += used;
  return res;
}

/// A constant-scalar-curvature metric phi^{4/(n-2)} g0 found by descent in the class of g0.
struct YamabeSolution {
  ScalarField phi;
  std::optional<MetricField> metric; ///< absent for reduced (cylinder) problems
  double lambda = 0.0;
  double quotient = 0.0;
  double residual = 0.0;
  double volume = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> quotient_history;
  std::size_t seed_index = 0;
};

namespace detail {

inline YamabeSolution package(const GridChart& chart, DescentResult r, const MetricField* g0) {
  YamabeSolution s{ScalarField(chart, std::move(r.phi)), std::nullopt, r.lambda, r.quotient, r.residual, r.volume,
                   r.iterations, r.converged, std::move(r.message), std::move(r.quotient_history)};
  if (g0 != nullptr) s.metric = apply_conformal_factor(*g0, s.phi);
  return s;
}

} // namespace detail

/// Yamabe descent in the conformal class of g0 (periodic grid), starting from phi = 1
/// or from `initial` when given.
inline YamabeSolution minimize_in_class(const MetricField& g0, const SolverOptions& opts = {},
                                        std::optional<ScalarField> initial = std::nullopt) {
  const GridConformalProblem problem(g0);
  std::vector<double> phi0 = initial ? std::vector<double>(initial->values().begin(), initial->values().end())
                                     : std::vector<double>(problem.size(), 1.0);
  return detail::package(g0.chart(), descend(problem, std::move(phi0), opts), &g0);
}

/// Yamabe descent for t-dependent conformal factors on S^1(length) x S^{n-1}.
inline YamabeSolution minimize_on_cylinder(int n, double length, int samples, const SolverOptions& opts = {},
                                           std::optional<std::vector<double>> initial = std::nullopt) {
  const CylinderConformalProblem problem(n, length, samples);
  auto phi0 = initial ? *initial : std::vector<double>(problem.size(), 1.0);
  return detail::package(problem.chart(), descend(problem, std::move(phi0), opts), nullptr);
}

/// Smooth positive seed 1 + perturbation built from low Fourier modes, max |perturbation| = amplitude.
inline std::vector<double> random_smooth_seed(const GridChart& chart, std::mt19937_64& rng, double amplitude = 0.4,
                                              int max_mode = 2) {
  auto phi = random_trig_field(chart, rng, max_mode);
  for (double& v : phi) v = 1.0 + amplitude * v;
  return phi;
}

/// Relative L2 distance between two nodal vectors.
inline double relative_l2_distance(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return std::sqrt(diff / std::max(na, nb));
}

/// Translate a periodic profile so that its (interpolated) maximum sits at t = 0.
inline std::vector<double> align_maximum_to_origin(std::span<const double> u, double period) {
  const TrigInterpolant f(u, period);
  const auto top = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
  const double h = period / static_cast<double>(u.size());
  double t = static_cast<double>(top) * h;
  for (int iter = 0; iter < 50; ++iter) {
    const double d1 = f.derivative(t, 1);
    const double d2 = f.derivative(t, 2);
    if (!(d2 < 0.0)) break;
    const double step = d1 / d2;
    t -= std::clamp(step, -h, h);
    if (std::abs(step) < 1e-15 * period) break;
  }
  return f.shifted(t);
}

struct MultiStartResult {
  std::vector<YamabeSolution> solutions; ///< distinct converged candidates sorted by Q, then flagged failures
  std::vector<YamabeSolution> per_seed;  ///< every seed's raw outcome, in seed order
};

namespace detail {

template <class Run>
std::vector<YamabeSolution> run_seeds(int seed_count, int threads, Run&& run) {
  std::vector<std::optional<YamabeSolution>> slots(static_cast<std::size_t>(seed_count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int s = next++; s < seed_count; s = next++) slots[s] = run(s);
  };
  const int pool = std::max(1, std::min(threads, seed_count));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::jthread> workers;
    for (int t = 0; t < pool; ++t) workers.emplace_back(worker);
  }
  std::vector<YamabeSolution> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline MultiStartResult merge_seeds(std::vector<YamabeSolution> per_seed, double dedup_tol, bool align, double period) {
  MultiStartResult result;
  std::vector<std::vector<double>> keys;
  std::vector<YamabeSolution> failures;
  for (const auto& s : per_seed) {
    if (!s.converged) {
      failures.push_back(s);
      continue;
    }
    auto key = align ? align_maximum_to_origin(s.phi.values(), period)
                     : std::vector<double>(s.phi.values().begin(), s.phi.values().end());
    bool duplicate = false;
    for (const auto& k : keys) {
      if (relative_l2_distance(k, key) < dedup_tol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      keys.push_back(std::move(key));
      result.solutions.push_back(s);
    }
  }
  std::stable_sort(result.solutions.begin(), result.solutions.end(),
                   [](const YamabeSolution& a, const YamabeSolution& b) { return a.quotient < b.quotient; });
  for (auto& f : failures) result.solutions.push_back(std::move(f));
  result.per_seed = std::move(per_seed);
  return result;
}

} // namespace detail

/// Descent from `seed_count` starts (seed 0: phi = 1; others randomized), deduplicated by
/// relative L2 distance of phi. Results are independent of `opts.threads`.
inline MultiStartResult multi_start(const MetricField& g0, int seed_count, std::uint64_t rng_seed,
                                    const SolverOptions& opts = {}) {
  const GridConformalProblem problem(g0);
  auto per_seed = detail::run_seeds(seed_count, opts.threads, [&](int s) {
    std::vector<double> phi0(problem.size(), 1.0);
    if (s > 0) {
      auto rng = seeded_stream(rng_seed, static_cast<std::uint64_t>(s));
      phi0 = random_smooth_seed(g0.chart(), rng);
    }
    auto sol = detail::package(g0.chart(), descend(problem, std::move(phi0), opts), &g0);
    sol.seed_index = static_cast<std::size_t>(s);
    return sol;
  });
  return detail::merge_seeds(std::move(per_seed), opts.dedup_tol, false, 0.0);
}

/// Multi-start in the cylinder reduction; profiles are translated so their maximum is at t = 0
/// before deduplication.
inline MultiStartResult multi_start_cylinder(int n, double length, int samples, int seed_count, std::uint64_t rng_seed,
                                             const SolverOptions& opts = {}) {
  const CylinderConformalProblem problem(n, length, samples);
  auto per_seed = detail::run_seeds(seed_count, opts.threads, [&](int s) {
    std::vector<double> phi0(problem.size(), 1.0);
    if (s > 0) {
      auto rng = seeded_stream(rng_seed, static_cast<std::uint64_t>(s));
      phi0 = random_smooth_seed(problem.chart(), rng, 0.4, 3);
    }
    auto sol = detail::package(problem.chart(), descend(problem, std::move(phi0), opts), nullptr);
    sol.seed_index = static_cast<std::size_t>(s);
    return sol;
  });
  return detail::merge_seeds(std::move(per_seed), opts.dedup_tol, true, length);
}

} // namespace yamabe
