// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Tolerances are pinned here and are not configurable.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "yamabe/yamabe.hpp"

using namespace yamabe;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
public:
  template <class T>
  Detail& operator<<(const T& v) {
    s_ << v;
    return *this;
  }
  std::string str() const { return s_.str(); }

private:
  std::ostringstream s_;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// 1. Sphere constant against n(n-1) omega_n^{2/n} with omega_3 = 2 pi^2.
Outcome criterion1() {
  const double lib = yamabe_sphere_constant(3);
  const double direct = 3.0 * 2.0 * std::pow(2.0 * kPi * kPi, 2.0 / 3.0);
  double worst_other = 0.0;
  for (int n = 3; n <= 8; ++n)
    worst_other = std::max(worst_other, std::abs(yamabe_sphere_constant(n) -
                                                 n * (n - 1.0) * std::pow(oracle::unit_sphere_volume(n), 2.0 / n)));
  const bool pass = std::abs(lib - direct) <= 1e-9 && std::abs(lib - 43.823) < 5e-4 && worst_other <= 1e-9;
  return {pass, "Lambda(3) = " + std::to_string(lib) + ", |lib - direct| = " + sci(std::abs(lib - direct)) +
                    ", n = 3..8 worst " + sci(worst_other)};
}

// 2. Q(round S^3) = Lambda(3).
Outcome criterion2() {
  double worst = 0.0;
  for (double r : {1.0, 0.5, 3.0}) {
    const double q = total_scalar_quotient(MetricField::canonical(GridChart::round_sphere(3, r)));
    worst = std::max(worst, std::abs(q - yamabe_sphere_constant(3)));
  }
  return {worst <= 1e-9, "max |Q(S^3_r) - Lambda(3)| over r in {1, 0.5, 3} = " + sci(worst)};
}

// 3. Flat curvature vanishes; conformally flat curvature converges at order >= 3.5.
Outcome criterion3() {
  const auto flat = MetricField::canonical(GridChart::periodic(3, 16));
  double flat_max = std::max(std::abs(scalar_curvature(flat).max()), std::abs(scalar_curvature(flat).min()));
  flat_max = std::max(flat_max, ricci(flat).max_abs());
  auto rng = seeded_stream(303, 0);
  const auto u = oracle::random_trig(GridChart::periodic(3, 16), rng, 0.2, 1);
  std::vector<double> err;
  for (int res : {16, 32, 64}) err.push_back(oracle::scalar_curvature_error(GridChart::periodic(3, res), u));
  const double o1 = std::log2(err[0] / err[1]);
  const double o2 = std::log2(err[1] / err[2]);
  const bool pass = flat_max <= 1e-12 && o1 >= 3.5 && o2 >= 3.5;
  return {pass, "flat max |Ric|,|R| = " + sci(flat_max) + "; R errors " + sci(err[0]) + ", " + sci(err[1]) + ", " +
                    sci(err[2]) + "; orders " + std::to_string(o1) + ", " + std::to_string(o2)};
}

// 4. First variations against central differences, 20 directions on a 64^3 perturbed torus.
Outcome criterion4() {
  constexpr int kDirections = 20;
  constexpr double kEps = 1e-4;
  constexpr double kTol = 1e-4;
  auto mrng = seeded_stream(2024, 0);
  const auto g = oracle::perturbed_torus(GridChart::periodic(3, 64), mrng, 0.1, 1);
  const auto split = conformal_split(g);
  double worst_full = 0.0, worst_conf = 0.0;
  for (int d = 0; d < kDirections; ++d) {
    auto rng = seeded_stream(2024, 100 + static_cast<std::uint64_t>(d));
    const auto h = oracle::random_symmetric(g.chart(), rng, Weight{}, 1);
    const double fd = (total_scalar_quotient(MetricField(g.tensor() + h.scaled(kEps))) -
                       total_scalar_quotient(MetricField(g.tensor() - h.scaled(kEps)))) /
                      (2.0 * kEps);
    worst_full = std::max(worst_full, relative_error(dQ_full(g, h), fd));

    const auto w = random_trace_free_direction(split.c, rng, 1);
    const double cfd = (quotient_at(split.omega, class_path(split.c, w, kEps)) -
                        quotient_at(split.omega, class_path(split.c, w, -kEps))) /
                       (2.0 * kEps);
    worst_conf = std::max(worst_conf, relative_error(dQ_conformal_direction(split.omega, split.c, w), cfd));
  }
  return {worst_full <= kTol && worst_conf <= kTol, std::to_string(kDirections) + " directions, max rel err full " +
                                                        sci(worst_full) + ", conformal " + sci(worst_conf)};
}

// 5. Vol^{1-2/n} [I(c1) - I(c0)] >= rhs - 1e-6 on 5 perturbed-torus class paths.
Outcome criterion5() {
  const auto chart = GridChart::periodic(3, 24);
  SolverOptions opts;
  opts.tol = 1e-9;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < 5; ++k) {
    auto rng = seeded_stream(5, k);
    const auto g0 = oracle::perturbed_torus(chart, rng, 0.15, 1);
    const auto c0 = conformal_split(g0).c;
    auto v = random_trace_free_direction(c0, rng, 1);
    v = v.scaled(0.2 / v.max_abs());
    const auto c1 = class_path(c0, v, 1.0);
    const auto s0 = minimize_in_class(g0, opts);
    const auto s1 = minimize_in_class(recombine(ScalarField::constant(chart, 1.0, Weight{1}), c1), opts);
    if (!s0.converged || !s1.converged) {
      pass = false;
      continue;
    }
    const auto omega = volume_density(*s1.metric);
    const double lhs = std::pow(integrate(omega), 1.0 - 2.0 / 3.0) * (s1.quotient - s0.quotient);
    const double rhs = modulus_bound_rhs(c0, v, omega, 16);
    worst_margin = std::min(worst_margin, lhs - rhs);
    pass = pass && lhs >= rhs - 1e-6;
  }
  return {pass, "5 paths on 24^3, min (lhs - rhs) = " + sci(worst_margin)};
}

MetricField bump_class(double amplitude, int axis) {
  std::vector<int> res{8, 8, 8};
  res[static_cast<std::size_t>(axis)] = 128;
  const auto chart = GridChart::periodic(3, res, std::vector<double>{1.0, 1.0, 1.0});
  return MetricField(SymTensorField::sample(chart, [&](std::span<const double> x, int i, int j) {
    return i == j ? std::pow(1.0 + amplitude * std::sin(2 * kPi * x[axis]), 4.0) : 0.0;
  }));
}

// 6. Flat-conformal classes: converged, CSC, unit volume, lambda ~ 0, one multi-start solution.
Outcome criterion6() {
  bool pass = true;
  Detail d;
  SolverOptions opts;
  opts.tol = 1e-9;
  const std::vector<std::pair<double, int>> classes = {{0.2, 0}, {0.1, 1}};
  for (const auto& [amp, axis] : classes) {
    const auto s = minimize_in_class(bump_class(amp, axis), opts);
    const double vol = volume(*s.metric);
    pass = pass && s.converged && s.residual <= 1e-6 && std::abs(vol - 1.0) <= 1e-8 && std::abs(s.lambda) <= 1e-5;
    d << "amp " << amp << ": lambda " << sci(s.lambda) << " residual " << sci(s.residual) << " |vol-1| "
      << sci(std::abs(vol - 1.0)) << "; ";
  }
  SolverOptions ms;
  const auto m = multi_start(bump_class(0.2, 0), 5, 7, ms);
  std::size_t distinct = 0;
  for (const auto& s : m.solutions) distinct += s.converged ? 1 : 0;
  pass = pass && distinct == 1 && m.solutions.size() == 1;
  d << "multi-start distinct " << distinct;
  return {pass, d.str()};
}

// 7. Bifurcation at 2 pi within 1 %, no nonconstant orbit at 2 pi - 0.3.
Outcome criterion7() {
  const auto scan = bifurcation_scan(4.0, 10.0, 60, 3, 1024);
  const double lstar = scan.bifurcation_length.value_or(std::nan(""));
  const double rel = std::abs(lstar - 2 * kPi) / (2 * kPi);
  bool first_branch_ok = true;
  for (std::size_t i = 0; i < scan.lengths.size(); ++i) {
    const bool beyond = scan.lengths[i] > lstar;
    first_branch_ok = first_branch_ok && (beyond ? scan.branch_counts[i] >= 2 : scan.branch_counts[i] == 1);
  }
  const auto below = cylinder_shoot(2 * kPi - 0.3, 3, 1.2, 0.0);
  const auto above = cylinder_shoot(2 * kPi + 0.3, 3, 1.2, 0.0);
  const bool pass = rel <= 0.01 && first_branch_ok && !below.point && above.point.has_value();
  return {pass, "L* = " + std::to_string(lstar) + " (rel err " + sci(rel) + "), counts consistent: " +
                    (first_branch_ok ? "yes" : "no") + ", orbit at 2pi-0.3: " + (below.point ? "found" : "none") +
                    ", at 2pi+0.3: " + (above.point ? "found" : "none")};
}

struct Frame {
  TensorDensityField c;
  DensityField omega;
};

Frame flat_frame() {
  auto s = conformal_split(MetricField::canonical(GridChart::periodic(3, 8)));
  return {std::move(s.c), std::move(s.omega)};
}

TensorDensityField random_q(const Frame& f, std::mt19937_64& rng) {
  return trace_free_project(f.c, oracle::random_symmetric(f.c.chart(), rng, Weight::q_tensor(3), 2));
}

std::pair<TensorDensityField, TensorDensityField> orthonormal_pair(const Frame& f) {
  auto rng = seeded_stream(808, 0);
  const auto probe = QEnsemble::from_fields(f.c, f.omega, {random_q(f, rng)});
  auto a = random_q(f, rng);
  auto b = random_q(f, rng);
  a = a.scaled(1.0 / std::sqrt(probe.q_inner(a, a)));
  b = b - a.scaled(probe.q_inner(a, b));
  b = b.scaled(1.0 / std::sqrt(probe.q_inner(b, b)));
  return {a, b};
}

bool all_negative_on_reevaluation(const QEnsemble& ens, const CertificateResult& r) {
  if (!r.direction) return false;
  for (std::size_t i = 0; i < ens.size(); ++i)
    if (!(pairing(*r.direction, ens.q()[i], ens.class_section()) < 0.0)) return false;
  return true;
}

// 8. Certificate examples.
Outcome criterion8() {
  Detail d;
  const auto einstein = QEnsemble::assemble({MetricField::canonical(GridChart::round_sphere(3))});
  const auto r1 = hull_feasibility(einstein);
  const bool ok1 = r1.status == CertificateStatus::measure_found && r1.weights == std::vector<double>{1.0} &&
                   r1.residual <= 1e-12;
  d << "einstein: " << status_name(r1.status) << " residual " << sci(r1.residual) << "; ";

  const auto f = flat_frame();
  const auto [a, b] = orthonormal_pair(f);
  const auto pair = QEnsemble::from_fields(f.c, f.omega, {a, b});
  const auto r2 = hull_feasibility(pair);
  const bool ok2 = r2.status == CertificateStatus::separated && std::abs(r2.residual - 1.0 / std::sqrt(2.0)) <= 1e-9 &&
                   all_negative_on_reevaluation(pair, r2);
  d << "orthogonal: " << status_name(r2.status) << " |residual - 1/sqrt2| " << sci(std::abs(r2.residual - 1.0 / std::sqrt(2.0)))
    << "; ";

  const auto cancel = QEnsemble::from_fields(f.c, f.omega, {a, a.scaled(-1.0)});
  const auto r3 = hull_feasibility(cancel);
  const bool ok3 = r3.status == CertificateStatus::measure_found && r3.weights.size() == 2 &&
                   std::abs(r3.weights[0] - 0.5) <= 1e-9 && std::abs(r3.weights[1] - 0.5) <= 1e-9;
  d << "cancellation: " << status_name(r3.status) << " weights " << r3.weights[0] << ", " << r3.weights[1];
  return {ok1 && ok2 && ok3, d.str()};
}

// 9. Dual check on the Einstein singleton; separated ensembles re-verify negative.
Outcome criterion9() {
  Detail d;
  bool pass = true;
  for (const auto& chart : {GridChart::round_sphere(3), GridChart::periodic(3, 8)}) {
    const auto ens = QEnsemble::assemble({MetricField::canonical(chart)});
    const auto rep = dual_sample_check(ens, 100, 9);
    pass = pass && std::abs(rep.min_max_pairing) <= 1e-10;
    d << chart.kind_name() << " min max pairing " << sci(rep.min_max_pairing) << "; ";
  }
  int separated = 0, verified = 0;
  const auto f = flat_frame();
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto rng = seeded_stream(909, k);
    const auto center = random_q(f, rng);
    std::vector<TensorDensityField> q;
    const std::size_t m = 1 + rng() % 6;
    for (std::size_t i = 0; i < m; ++i) q.push_back(center + random_q(f, rng).scaled(0.3 * (1 + k % 3)));
    const auto ens = QEnsemble::from_fields(f.c, f.omega, q);
    const auto r = hull_feasibility(ens);
    if (r.status != CertificateStatus::separated) continue;
    ++separated;
    verified += all_negative_on_reevaluation(ens, r) ? 1 : 0;
  }
  const auto cyl = QEnsemble::assemble({MetricField::canonical(GridChart::product_cylinder(3, 5.0))});
  const auto rc = hull_feasibility(cyl);
  if (rc.status == CertificateStatus::separated) {
    ++separated;
    verified += all_negative_on_reevaluation(cyl, rc) ? 1 : 0;
  }
  pass = pass && separated > 0 && verified == separated;
  d << "separated ensembles re-verified " << verified << "/" << separated;
  return {pass, d.str()};
}

int run_lab(const std::string& command, const std::string& config, const fs::path& out) {
  const std::string cmd = std::string("\"") + YAMABE_LAB_EXE + "\" " + command + " --config " + config + " --out " +
                          out.string() + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> outputs(const fs::path& out) {
  std::map<std::string, std::string> files;
  if (!fs::exists(out)) return files;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename() != "manifest.json") files[e.path().filename().string()] = read_file(e.path().string());
  return files;
}

// 10. Every shipped config, run twice, gives byte-identical tables and snapshots.
Outcome criterion10() {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"curvature", "flat-torus-curvature.toml"},     {"minimize", "conformal-bump-minimize.toml"},
      {"multi-start", "conformal-bump-multistart.toml"}, {"multi-start", "cylinder-multistart.toml"},
      {"scan", "cylinder-scan.toml"},                  {"check-derivatives", "perturbed-derivatives.toml"},
      {"certify", "certify-flat.toml"},                {"certify", "certify-sphere.toml"}};
  const auto root = fs::temp_directory_path() / "yamabe_acceptance_c10";
  fs::remove_all(root);
  bool pass = true;
  int identical = 0;
  Detail d;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& [cmd, cfg] = runs[k];
    const auto path = std::string(YAMABE_CONFIG_DIR) + "/" + cfg;
    const auto a = root / (std::to_string(k) + "a"), b = root / (std::to_string(k) + "b");
    const int ea = run_lab(cmd, path, a), eb = run_lab(cmd, path, b);
    const auto fa = outputs(a), fb = outputs(b);
    const bool same = ea == 0 && eb == 0 && !fa.empty() && fa == fb;
    if (same) ++identical;
    else d << cmd << " " << cfg << " (exit " << ea << "/" << eb << ", " << fa.size() << " files) differs; ";
    pass = pass && same;
  }
  fs::remove_all(root);
  d << identical << "/" << runs.size() << " config runs byte-identical";
  return {pass, d.str()};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"sphere constant", criterion1},
      {"round-sphere quotient", criterion2},
      {"curvature oracles", criterion3},
      {"first-variation checks", criterion4},
      {"modulus inequality", criterion5},
      {"flat-conformal Yamabe solve", criterion6},
      {"cylinder bifurcation", criterion7},
      {"certificate engine", criterion8},
      {"dual check", criterion9},
      {"reproducibility", criterion10}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %s  %s: %s [%.1fs]\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
