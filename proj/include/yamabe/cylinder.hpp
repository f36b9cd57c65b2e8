#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "yamabe/chart.hpp"
#include "yamabe/derivatives.hpp"
#include "yamabe/fields.hpp"
#include "yamabe/integration.hpp"

namespace yamabe {

/// Constants of the reduced CSC equation on S^1(L) x S^{n-1}(1):
///   -a u'' + rc u = lambda u^p,  a = 4(n-1)/(n-2),  rc = (n-1)(n-2),  p = (n+2)/(n-2).
struct CylinderEquation {
  int n;
  double a;
  double rc;
  double p;

  explicit CylinderEquation(int dim)
      : n(dim), a(4.0 * (dim - 1) / (dim - 2)), rc((dim - 1.0) * (dim - 2.0)), p((dim + 2.0) / (dim - 2.0)) {
    if (dim < 3) throw DomainError("cylinder equation needs n >= 3");
  }

  /// Circumference at which the first nonconstant branch leaves u = 1 (linearization u'' = -(n-2) u).
  double bifurcation_length() const { return 2.0 * std::numbers::pi / std::sqrt(n - 2.0); }

  /// Largest maximum of a periodic orbit around u = 1 (edge of the homoclinic loop) when lambda = rc.
  double homoclinic_amplitude() const { return std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0)); }

  /// Conserved energy (a/2) u'^2 - rc (u^2/2 - u^{p+1}/(p+1)) at lambda = rc.
  double energy(double u, double du) const {
    return 0.5 * a * du * du - rc * (0.5 * u * u - std::pow(u, p + 1.0) / (p + 1.0));
  }

  /// Volume of u^{4/(n-2)} (dt^2 + g_{S^{n-1}}) from samples of u on a uniform grid of [0, L).
  double volume(const std::vector<double>& u, double length) const {
    std::vector<double> t(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) t[k] = std::pow(u[k], 2.0 * n / (n - 2.0));
    return sphere_volume(n - 1) * pairwise_sum(t) * length / static_cast<double>(u.size());
  }
};

enum class BranchKind { constant, nonconstant };

inline const char* branch_kind_name(BranchKind k) { return k == BranchKind::constant ? "constant" : "nonconstant"; }

/// A periodic CSC profile on S^1(L) x S^{n-1}.
struct BranchPoint {
  double L = 0.0;
  int n = 3;
  BranchKind kind = BranchKind::constant;
  int humps = 0;                 ///< number of maxima per period; 0 for the constant branch
  std::vector<double> profile;   ///< u at t_k = k L / N, scaled to unit volume
  double lambda = 0.0;           ///< scalar curvature at unit volume
  double lambda_shooting = 0.0;  ///< lambda in the shooting gauge (rc for every branch)
  double amplitude = 1.0;        ///< max u in the shooting gauge
  double closure_u = 0.0;        ///< |u(L) - u(0)| of the shooting orbit
  double closure_du = 0.0;       ///< |u'(L) - u'(0)|
};

struct ShootResult {
  std::optional<BranchPoint> point;
  std::string message;
  double closest_miss = 0.0; ///< best |T(s) - L/k| when no orbit closes
};

namespace detail {

using CylState = std::array<double, 2>;

class CylinderOde {
public:
  explicit CylinderOde(const CylinderEquation& eq) : eq_(eq) {}
  void operator()(const CylState& x, CylState& dx, double) const {
    dx[0] = x[1];
    dx[1] = eq_.rc * (x[0] - std::pow(x[0], eq_.p)) / eq_.a;
  }

private:
  CylinderEquation eq_;
};

inline auto cylinder_stepper() {
  namespace odeint = boost::numeric::odeint;
  return odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<CylState>());
}

/// Period of the orbit through the maximum (s, 0), 1 < s < homoclinic amplitude.
/// The orbit is symmetric about its maximum; the minimum is reached at half period.
inline double orbit_period(const CylinderEquation& eq, double s) {
  const CylinderOde ode(eq);
  auto stepper = cylinder_stepper();
  stepper.initialize(CylState{s, 0.0}, 0.0, 1e-3);
  CylState x{};
  for (int steps = 0; steps < 1000000; ++steps) {
    const auto [t0, t1] = stepper.do_step(ode);
    stepper.calc_state(t1, x);
    if (x[1] >= 0.0) {
      CylState y{};
      stepper.calc_state(t0, y);
      if (y[1] < 0.0 || t0 == 0.0) {
        double lo = t0, hi = t1;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          stepper.calc_state(mid, y);
          (y[1] < 0.0 ? lo : hi) = mid;
        }
        return 2.0 * 0.5 * (lo + hi);
      }
    }
    if (t1 > 1e6) break;
  }
  return std::numeric_limits<double>::infinity();
}

/// Orbit samples at t_k = k L / N and the closure error of the state at t = L.
inline void sample_orbit(const CylinderEquation& eq, double s, double length, int samples, std::vector<double>& u,
                         double& closure_u, double& closure_du) {
  const CylinderOde ode(eq);
  auto stepper = cylinder_stepper();
  stepper.initialize(CylState{s, 0.0}, 0.0, 1e-3);
  u.assign(static_cast<std::size_t>(samples), 0.0);
  CylState x{};
  int k = 0;
  while (true) {
    const auto [t0, t1] = stepper.do_step(ode);
    while (k < samples && static_cast<double>(k) * length / samples <= t1) {
      stepper.calc_state(static_cast<double>(k) * length / samples, x);
      u[static_cast<std::size_t>(k)] = x[0];
      ++k;
    }
    if (t1 >= length) {
      stepper.calc_state(length, x);
      closure_u = std::abs(x[0] - s);
      closure_du = std::abs(x[1]);
      return;
    }
    (void)t0;
  }
}

inline BranchPoint finish_branch(const CylinderEquation& eq, double length, int humps, double s,
                                 std::vector<double> u, double cu, double cdu) {
  BranchPoint b;
  b.L = length;
  b.n = eq.n;
  b.kind = humps == 0 ? BranchKind::constant : BranchKind::nonconstant;
  b.humps = humps;
  b.lambda_shooting = eq.rc;
  b.amplitude = s;
  b.closure_u = cu;
  b.closure_du = cdu;
  // u -> k u scales lambda by k^{1-p} and volume by k^{2n/(n-2)}
  const double vol = eq.volume(u, length);
  const double k = std::pow(vol, -(eq.n - 2.0) / (2.0 * eq.n));
  for (double& v : u) v *= k;
  b.lambda = eq.rc * std::pow(k, 1.0 - eq.p);
  b.profile = std::move(u);
  return b;
}

} // namespace detail

/// The constant solution u = const on S^1(L) x S^{n-1}, at unit volume.
inline BranchPoint cylinder_constant_branch(double length, int n, int samples = 1024) {
  const CylinderEquation eq(n);
  return detail::finish_branch(eq, length, 0, 1.0, std::vector<double>(static_cast<std::size_t>(samples), 1.0), 0.0, 0.0);
}

struct ShootOptions {
  int humps = 1;      ///< maxima per period of the sought orbit
  int samples = 1024; ///< profile samples on [0, L)
  double closure_tol = 1e-8;
};

/// Periodic CSC orbit of the reduced equation with circumference L, started from the state (u0, du0)
/// in the gauge lambda = (n-1)(n-2). The start fixes the energy level of the first guess; the
/// orbit is then moved to its maximum at t = 0 and its amplitude tuned until the period is L/humps.
/// u0 = 1, du0 = 0 selects the constant branch.
inline ShootResult cylinder_shoot(double length, int n, double u0, double du0, const ShootOptions& opts = {}) {
  if (!(length > 0.0)) throw DomainError("cylinder_shoot: L must be positive");
  if (!(u0 > 0.0)) throw DomainError("cylinder_shoot: u0 must be positive");
  if (opts.humps < 1) throw DomainError("cylinder_shoot: humps must be at least 1");
  const CylinderEquation eq(n);
  ShootResult out;
  if (u0 == 1.0 && du0 == 0.0) {
    out.point = cylinder_constant_branch(length, n, opts.samples);
    out.message = "constant branch";
    return out;
  }
  const double e0 = eq.energy(u0, du0);
  const double sh = eq.homoclinic_amplitude();
  if (!(e0 < 0.0)) {
    out.message = "start lies outside the periodic region around u = 1";
    out.closest_miss = std::numeric_limits<double>::infinity();
    return out;
  }
  // maximum s of the level set through the start: energy(s, 0) = e0, 1 < s < sh
  const auto level = [&](double s) { return eq.energy(s, 0.0) - e0; };
  std::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  double s0 = 1.0;
  if (e0 > eq.energy(1.0, 0.0)) {
    const auto r = boost::math::tools::toms748_solve(level, 1.0, sh, level(1.0), level(sh), tol, iters);
    s0 = 0.5 * (r.first + r.second);
  }

  const double target = length / opts.humps;
  const double t_lin = eq.bifurcation_length();
  if (!(target > t_lin)) {
    out.message = "no nonconstant orbit: L/humps is not above the linearized period";
    out.closest_miss = t_lin - target;
    return out;
  }
  const auto mismatch = [&](double s) { return detail::orbit_period(eq, s) - target; };
  // bracket around the seed amplitude
  double lo = std::clamp(s0, 1.0 + 1e-6, sh - 1e-6);
  double hi = lo;
  double flo = mismatch(lo), fhi = flo;
  double best = std::abs(flo);
  for (int k = 0; k < 80 && flo > 0.0; ++k) {
    lo = 1.0 + 0.5 * (lo - 1.0);
    flo = mismatch(lo);
    best = std::min(best, std::abs(flo));
  }
  for (int k = 0; k < 80 && fhi < 0.0; ++k) {
    hi = sh - 0.5 * (sh - hi);
    fhi = mismatch(hi);
    best = std::min(best, std::abs(fhi));
  }
  if (!(flo <= 0.0 && fhi >= 0.0)) {
    out.message = "period root not bracketed";
    out.closest_miss = best;
    return out;
  }
  double s = lo;
  if (flo != 0.0 && fhi != 0.0) {
    iters = 200;
    const auto r = boost::math::tools::toms748_solve(mismatch, lo, hi, flo, fhi, tol, iters);
    s = std::abs(mismatch(r.first)) < std::abs(mismatch(r.second)) ? r.first : r.second;
  } else if (fhi == 0.0) {
    s = hi;
  }
  std::vector<double> u;
  double cu = 0.0, cdu = 0.0;
  detail::sample_orbit(eq, s, length, opts.samples, u, cu, cdu);
  if (cu > opts.closure_tol || cdu > opts.closure_tol) {
    out.message = "orbit does not close within tolerance";
    out.closest_miss = std::max(cu, cdu);
    return out;
  }
  out.point = detail::finish_branch(eq, length, opts.humps, s, std::move(u), cu, cdu);
  out.message = "closed orbit";
  return out;
}

/// Lowest nonzero periodic eigenvalue of the discretized linearization  -a D^2 - (p-1) rc
/// at u = 1 (mode 1 on a grid of `samples` points); negative once a branch has bifurcated.
inline double linearized_mode_eigenvalue(double length, int n, int samples = 256) {
  const CylinderEquation eq(n);
  const double h = length / samples;
  const double sigma = detail::staggered_symbol(2.0 * std::numbers::pi / length, h);
  return eq.a * sigma * sigma - (eq.p - 1.0) * eq.rc;
}

struct BifurcationScan {
  std::vector<BranchPoint> points;        ///< all branch entries, ordered by L then humps
  std::vector<double> lengths;            ///< scanned circumferences
  std::vector<int> branch_counts;         ///< distinct branches found at each scanned L
  std::optional<double> bifurcation_length; ///< first sign change of the linearized eigenvalue
};

/// Sweep L over [l_min, l_max] (steps + 1 points) collecting the constant branch and every
/// k-hump nonconstant branch that shooting closes (k = 1, 2, ... until one fails).
inline BifurcationScan bifurcation_scan(double l_min, double l_max, int steps, int n, int samples = 1024) {
  if (!(l_min > 0.0) || !(l_max >= l_min)) throw DomainError("bifurcation_scan: need 0 < l_min <= l_max");
  if (steps < 1) throw DomainError("bifurcation_scan: steps must be positive");
  const CylinderEquation eq(n);
  BifurcationScan scan;
  const auto eig = [&](double l) { return linearized_mode_eigenvalue(l, n, samples); };
  double prev_l = l_min, prev_e = eig(l_min);
  for (int i = 0; i <= steps; ++i) {
    const double l = l_min + (l_max - l_min) * i / steps;
    scan.lengths.push_back(l);
    const double e = eig(l);
    if (!scan.bifurcation_length && i > 0 && prev_e > 0.0 && e <= 0.0) {
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(eig, prev_l, l, prev_e, e,
                                                       boost::math::tools::eps_tolerance<double>(50), iters);
      scan.bifurcation_length = 0.5 * (r.first + r.second);
    }
    prev_l = l;
    prev_e = e;

    int count = 1;
    scan.points.push_back(cylinder_constant_branch(l, n, samples));
    // a k-hump orbit of length l is a one-hump orbit of length l/k, so stop at the first miss
    for (int k = 1;; ++k) {
      ShootOptions opts;
      opts.humps = k;
      opts.samples = samples;
      const double seed = 1.0 + 0.5 * (eq.homoclinic_amplitude() - 1.0);
      auto r = cylinder_shoot(l, n, seed, 0.0, opts);
      if (!r.point) break;
      scan.points.push_back(std::move(*r.point));
      ++count;
    }
    scan.branch_counts.push_back(count);
  }
  return scan;
}

/// Scalar-curvature residual of a profile lifted to S^1(L) x S^{n-1}: the metric
/// u(t)^{4/(n-2)} (dt^2 + g_{S^{n-1}}) has R = u^{-p}(-a u'' + rc u), with u'' from the
/// compact fourth-order second difference on the sampled circle axis. Returns max |R - mean R| (volume-weighted mean).
inline double cylinder_csc_residual(const ScalarField& u, double* lambda_out = nullptr) {
  const auto& chart = u.chart();
  const auto* cyl = std::get_if<ProductCylinder>(&chart.kind());
  if (cyl == nullptr || chart.axis_count() != 1)
    throw UnsupportedChartError("cylinder_csc_residual needs a product-cylinder chart with a sampled circle");
  if (cyl->sphere_radius != 1.0) throw UnsupportedChartError("cylinder_csc_residual assumes a unit sphere factor");
  const CylinderEquation eq(chart.dim());
  const std::vector<double> unit(u.size(), 1.0);
  std::vector<double> d2u(u.size());
  detail::divergence_form(chart, unit, unit, u.values(), d2u);
  std::vector<double> r(u.size()), w(u.size()), rw(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] > 0.0)) throw DomainError("cylinder_csc_residual: profile must be positive");
    r[k] = std::pow(u[k], -eq.p) * (-eq.a * d2u[k] + eq.rc * u[k]);
    w[k] = std::pow(u[k], 2.0 * eq.n / (eq.n - 2.0));
    rw[k] = r[k] * w[k];
  }
  const double lambda = pairwise_sum(rw) / pairwise_sum(w);
  if (lambda_out != nullptr) *lambda_out = lambda;
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v - lambda));
  return worst;
}

/// A branch profile as a conformal factor on the sampled product-cylinder chart.
inline ScalarField lift_to_cylinder(const BranchPoint& b) {
  const auto chart = GridChart::product_cylinder(b.n, b.L, 1.0, static_cast<int>(b.profile.size()));
  return ScalarField(chart, b.profile);
}

} // namespace yamabe
