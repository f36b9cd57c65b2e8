#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "yamabe/yamabe.hpp"
#include "yamabe/lab/config.hpp"
#include "yamabe/lab/table.hpp"

namespace yamabe::lab {

enum ExitCode : int { kOk = 0, kValidation = 2, kNotConverged = 3 };

struct RunOutcome {
  int exit_code = kOk;
  std::string status = "ok";
  std::vector<std::string> outputs;
  std::vector<std::string> errors;
};

/// Parallelism for library calls: hardware concurrency capped by YAMABE_LAB_THREADS.
inline int thread_budget() {
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("YAMABE_LAB_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw ConfigError("YAMABE_LAB_THREADS must be a positive integer");
    threads = std::min<int>(threads, static_cast<int>(std::min(cap, 1024L)));
  }
  return threads;
}

namespace detail {

inline constexpr std::uint64_t kMetricStream = 1000003;

inline std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& what) {
  if (!seed) throw ConfigError(what + " needs an rng seed (config 'seed' or --seed)");
  return *seed;
}

/// The background metric of a config.
inline MetricField make_metric(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed) {
  const auto chart = make_chart(cfg.chart);
  const auto& m = cfg.metric;
  if (chart.is_model()) {
    if (chart.axis_count() != 0) throw ConfigError("sampled cylinder charts carry conformal factors, not metrics");
    return MetricField::canonical(chart, m.scale);
  }
  const int n = chart.dim();
  if (m.family == "flat") return MetricField::canonical(chart, m.scale);
  if (m.family == "conformal-bump") {
    if (n < 3) throw ConfigError("conformal-bump metrics need dim >= 3");
    const double e = 4.0 / (n - 2);
    const double p0 = chart.periods()[0];
    return MetricField(SymTensorField::sample(chart, [&](std::span<const double> x, int i, int j) {
      const double u = 1.0 + m.amplitude * std::sin(2.0 * std::numbers::pi * x[0] / p0);
      return i == j ? m.scale * std::pow(u, e) : 0.0;
    }));
  }
  auto rng = seeded_stream(require_seed(seed, "the perturbed metric family"), kMetricStream);
  auto t = SymTensorField::identity(chart, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto f = random_trig_field(chart, rng, m.modes);
      for (std::size_t node = 0; node < chart.node_count(); ++node) {
        auto a = t.at(node);
        a[i * n + j] += m.amplitude * f[node];
        if (i != j) a[j * n + i] += m.amplitude * f[node];
      }
    }
  }
  return MetricField(t.scaled(m.scale));
}

inline SolverOptions solver_options(const ExperimentConfig& cfg, int threads) {
  SolverOptions o;
  o.tol = cfg.solver.tol;
  o.max_iter = cfg.solver.max_iter;
  o.dedup_tol = cfg.solver.dedup_tol;
  o.continuation = cfg.solver.continuation;
  o.threads = threads;
  return o;
}

inline bool is_sampled_cylinder(const GridChart& chart) {
  return std::holds_alternative<ProductCylinder>(chart.kind()) && chart.axis_count() == 1;
}

inline const ProductCylinder& cylinder_of(const GridChart& chart) {
  const auto* cyl = std::get_if<ProductCylinder>(&chart.kind());
  if (cyl == nullptr) throw ConfigError("this command needs a product-cylinder chart");
  if (cyl->sphere_radius != 1.0) throw ConfigError("the cylinder reduction assumes radius = 1");
  return *cyl;
}

inline const char* solution_label(const YamabeSolution& s) {
  return s.converged ? "CSC critical point" : "not converged";
}

class Emitter {
public:
  Emitter(const ExperimentConfig& cfg, std::string dir, RunOutcome& out) : cfg_(cfg), dir_(std::move(dir)), out_(out) {}

  void table(const Table& t) {
    for (auto& f : emit_table(t, dir_, cfg_.output.csv, cfg_.output.json)) out_.outputs.push_back(std::move(f));
  }

  template <class Field>
  void snapshot(const std::string& name, const Field& f) {
    if (!cfg_.output.snapshots) return;
    write_snapshot(dir_ + "/" + name, f);
    out_.outputs.push_back(name);
  }

private:
  const ExperimentConfig& cfg_;
  std::string dir_;
  RunOutcome& out_;
};

inline std::vector<Cell> solution_row(const YamabeSolution& s) {
  return {s.lambda, s.quotient, s.residual, s.volume, static_cast<std::int64_t>(s.iterations), s.converged,
          std::string(solution_label(s))};
}

inline const std::vector<std::string>& solution_columns() {
  static const std::vector<std::string> c = {"lambda", "quotient", "residual", "volume", "iterations", "converged",
                                             "label"};
  return c;
}

inline void run_curvature(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed, Emitter& emit) {
  const auto g = make_metric(cfg, seed);
  const auto rho = volume_density(g);
  const auto r = scalar_curvature(g);
  const double vol = integrate(rho);
  Table t{"curvature",
          {"chart", "dim", "nodes", "volume", "r_min", "r_max", "r_mean", "einstein_residual", "quotient"},
          {}};
  t.add({g.chart().kind_name(), static_cast<std::int64_t>(g.dim()), static_cast<std::int64_t>(g.node_count()), vol,
         r.min(), r.max(), integrate(r, rho) / vol, einstein_residual(g), total_scalar_quotient(g)});
  emit.table(t);
  emit.snapshot("metric.snap", g);
  emit.snapshot("scalar_curvature.snap", r);
}

inline int run_minimize(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed, int threads,
                        Emitter& emit) {
  const auto chart = make_chart(cfg.chart);
  const auto opts = solver_options(cfg, threads);
  const auto s = [&] {
    if (is_sampled_cylinder(chart)) {
      const auto& cyl = cylinder_of(chart);
      return minimize_on_cylinder(chart.dim(), cyl.length, chart.resolution()[0], opts);
    }
    require_periodic(chart, "minimize");
    return minimize_in_class(make_metric(cfg, seed), opts);
  }();
  Table t{"solution", solution_columns(), {}};
  t.add(solution_row(s));
  emit.table(t);
  Table h{"history", {"iteration", "quotient"}, {}};
  for (std::size_t k = 0; k < s.quotient_history.size(); ++k)
    h.add({static_cast<std::int64_t>(k), s.quotient_history[k]});
  emit.table(h);
  emit.snapshot("phi.snap", s.phi);
  if (s.metric) emit.snapshot("metric.snap", *s.metric);
  return s.converged ? kOk : kNotConverged;
}

inline MultiStartResult multi_start_from_config(const ExperimentConfig& cfg, std::uint64_t seed, int threads) {
  const auto chart = make_chart(cfg.chart);
  const auto opts = solver_options(cfg, threads);
  if (is_sampled_cylinder(chart)) {
    const auto& cyl = cylinder_of(chart);
    return multi_start_cylinder(chart.dim(), cyl.length, chart.resolution()[0], cfg.solver.seeds, seed, opts);
  }
  require_periodic(chart, "multi-start");
  return multi_start(make_metric(cfg, seed), cfg.solver.seeds, seed, opts);
}

inline int run_multi_start(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed, int threads,
                           Emitter& emit) {
  const auto rng_seed = require_seed(seed, "multi-start");
  const auto ms = multi_start_from_config(cfg, rng_seed, threads);
  auto cols = solution_columns();
  cols.insert(cols.begin(), {"rank", "seed_index"});
  Table t{"solutions", cols, {}};
  Table ps{"seeds", cols, {}};
  bool all_converged = true;
  for (std::size_t k = 0; k < ms.solutions.size(); ++k) {
    auto row = solution_row(ms.solutions[k]);
    row.insert(row.begin(), {static_cast<std::int64_t>(k), static_cast<std::int64_t>(ms.solutions[k].seed_index)});
    t.add(std::move(row));
    emit.snapshot("phi_" + std::to_string(k) + ".snap", ms.solutions[k].phi);
  }
  for (const auto& s : ms.per_seed) {
    auto row = solution_row(s);
    row.insert(row.begin(), {std::int64_t{-1}, static_cast<std::int64_t>(s.seed_index)});
    ps.add(std::move(row));
    all_converged = all_converged && s.converged;
  }
  emit.table(t);
  emit.table(ps);
  return all_converged ? kOk : kNotConverged;
}

inline void run_scan(const ExperimentConfig& cfg, Emitter& emit) {
  const auto chart = make_chart(cfg.chart);
  cylinder_of(chart);
  const int samples = chart.axis_count() == 1 ? chart.resolution()[0] : 1024;
  const int n = chart.dim();
  const auto scan = bifurcation_scan(cfg.scan.l_min, cfg.scan.l_max, cfg.scan.steps, n, samples);
  Table b{"branches", {"L", "kind", "humps", "lambda", "lambda_shooting", "amplitude", "closure_u", "closure_du"}, {}};
  for (const auto& p : scan.points)
    b.add({p.L, std::string(branch_kind_name(p.kind)), static_cast<std::int64_t>(p.humps), p.lambda, p.lambda_shooting,
           p.amplitude, p.closure_u, p.closure_du});
  emit.table(b);
  Table c{"branch_counts", {"L", "branches"}, {}};
  for (std::size_t k = 0; k < scan.lengths.size(); ++k)
    c.add({scan.lengths[k], static_cast<std::int64_t>(scan.branch_counts[k])});
  emit.table(c);
  const double predicted = CylinderEquation(n).bifurcation_length();
  Table s{"bifurcation", {"found", "bifurcation_length", "linearized_prediction", "relative_error"}, {}};
  if (scan.bifurcation_length) {
    s.add({true, *scan.bifurcation_length, predicted, std::abs(*scan.bifurcation_length - predicted) / predicted});
  } else {
    s.add({false, std::numeric_limits<double>::quiet_NaN(), predicted, std::numeric_limits<double>::quiet_NaN()});
  }
  emit.table(s);
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline int run_check_derivatives(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed, Emitter& emit) {
  const auto rng_seed = require_seed(seed, "check-derivatives");
  const auto g = make_metric(cfg, seed);
  require_periodic(g.chart(), "check-derivatives");
  require_conformal_dim(g.dim(), "check-derivatives");
  const int n = g.dim();
  const double eps = cfg.derivatives.epsilon;
  const auto split = conformal_split(g);
  Table t{"derivatives", {"direction", "kind", "analytic", "finite_difference", "relative_error"}, {}};
  double worst_full = 0.0, worst_conf = 0.0;
  for (int d = 0; d < cfg.derivatives.directions; ++d) {
    auto rng = seeded_stream(rng_seed, static_cast<std::uint64_t>(d));
    auto h = SymTensorField::zero(g.chart());
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const auto f = random_trig_field(g.chart(), rng, cfg.derivatives.max_mode);
        for (std::size_t node = 0; node < g.node_count(); ++node) {
          auto a = h.at(node);
          a[i * n + j] = f[node];
          a[j * n + i] = f[node];
        }
      }
    }
    const double full = dQ_full(g, h);
    const double full_fd = (total_scalar_quotient(MetricField(g.tensor() + h.scaled(eps))) -
                            total_scalar_quotient(MetricField(g.tensor() - h.scaled(eps)))) /
                           (2.0 * eps);
    worst_full = std::max(worst_full, relative_error(full, full_fd));
    t.add({static_cast<std::int64_t>(d), std::string("full"), full, full_fd, relative_error(full, full_fd)});

    const auto w = random_trace_free_direction(split.c, rng, cfg.derivatives.max_mode);
    const double conf = dQ_conformal_direction(split.omega, split.c, w);
    const double conf_fd =
        (quotient_at(split.omega, class_path(split.c, w, eps)) - quotient_at(split.omega, class_path(split.c, w, -eps))) /
        (2.0 * eps);
    worst_conf = std::max(worst_conf, relative_error(conf, conf_fd));
    t.add({static_cast<std::int64_t>(d), std::string("conformal"), conf, conf_fd, relative_error(conf, conf_fd)});
  }
  emit.table(t);
  Table s{"derivative_summary", {"directions", "max_relative_error_full", "max_relative_error_conformal", "tolerance"}, {}};
  s.add({static_cast<std::int64_t>(cfg.derivatives.directions), worst_full, worst_conf, cfg.derivatives.tolerance});
  emit.table(s);
  return std::max(worst_full, worst_conf) <= cfg.derivatives.tolerance ? kOk : kNotConverged;
}

/// Ensemble manifest: {"members": ["a.snap", ...], "chart": {...optional chart descriptor...}}.
inline std::vector<MetricField> load_ensemble_manifest(const std::string& path) {
  const auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("ensemble manifest " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("members") || !j["members"].is_array() || j["members"].empty())
    throw IoError("ensemble manifest " + path + " needs a non-empty \"members\" array");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<MetricField> metrics;
  for (const auto& m : j["members"]) {
    if (!m.is_string()) throw IoError("ensemble manifest members must be snapshot paths");
    metrics.push_back(read_snapshot((base / m.get<std::string>()).string()).metric());
  }
  if (j.contains("chart")) {
    const auto& c = j["chart"];
    const auto& chart = metrics.front().chart();
    if (c.contains("kind") && c["kind"].get<std::string>() != chart.kind_name())
      throw IoError("ensemble manifest chart kind does not match the snapshots");
    if (c.contains("dim") && c["dim"].get<int>() != chart.dim())
      throw IoError("ensemble manifest chart dim does not match the snapshots");
    if (c.contains("resolution") && c["resolution"].get<std::vector<int>>() != chart.resolution())
      throw IoError("ensemble manifest chart resolution does not match the snapshots");
  }
  return metrics;
}

inline int run_certify(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed, int threads,
                       Emitter& emit) {
  const auto rng_seed = require_seed(seed, "certify");
  std::vector<MetricField> metrics;
  bool solver_ok = true;
  if (cfg.certify.source == "metric") {
    metrics.push_back(make_metric(cfg, seed));
  } else if (cfg.certify.source == "multi-start") {
    const auto chart = make_chart(cfg.chart);
    require_periodic(chart, "certify from multi-start");
    const auto ms = multi_start_from_config(cfg, rng_seed, threads);
    for (const auto& s : ms.solutions)
      if (s.converged && s.metric) metrics.push_back(*s.metric);
    for (const auto& s : ms.per_seed) solver_ok = solver_ok && s.converged;
    if (metrics.empty()) throw EnsembleError(0, "multi-start produced no converged solution");
  } else {
    auto p = std::filesystem::path(cfg.certify.manifest);
    if (p.is_relative()) p = std::filesystem::path(cfg.base_dir) / p;
    metrics = load_ensemble_manifest(p.string());
  }
  const auto ens = QEnsemble::assemble(metrics, 1e-8, threads);
  MinNormOptions mo;
  mo.tol = cfg.certify.tol;
  const auto res = hull_feasibility(ens, mo);
  const auto dual = dual_sample_check(ens, cfg.certify.directions, rng_seed, res.direction);

  Table c{"certificate",
          {"status", "members", "residual", "lower_bound", "threshold", "margin", "iterations", "dual_directions",
           "dual_min_max_pairing", "dual_counterexamples"},
          {}};
  c.add({std::string(status_name(res.status)), static_cast<std::int64_t>(ens.size()), res.residual, res.lower_bound,
         res.threshold, res.direction ? res.margin : std::numeric_limits<double>::quiet_NaN(),
         static_cast<std::int64_t>(res.iterations), static_cast<std::int64_t>(dual.directions),
         dual.directions > 0 ? dual.min_max_pairing : std::numeric_limits<double>::quiet_NaN(),
         static_cast<std::int64_t>(dual.counterexamples.size())});
  emit.table(c);
  Table w{"weights", {"member", "weight", "direction_pairing"}, {}};
  for (std::size_t i = 0; i < ens.size(); ++i)
    w.add({static_cast<std::int64_t>(i), res.weights[i],
           res.direction ? res.pairings[i] : std::numeric_limits<double>::quiet_NaN()});
  emit.table(w);
  if (res.status == CertificateStatus::measure_found) {
    const auto support = normalize_measure(res.weights);
    Table m{"measure", {"member", "weight"}, {}};
    for (std::size_t k = 0; k < support.indices.size(); ++k)
      m.add({static_cast<std::int64_t>(support.indices[k]), support.weights[k]});
    emit.table(m);
  }
  Table d{"dual_samples", {"direction", "max_pairing"}, {}};
  for (std::size_t k = 0; k < dual.max_pairings.size(); ++k) d.add({static_cast<std::int64_t>(k), dual.max_pairings[k]});
  emit.table(d);
  Table gram{"gram", {"i", "j", "value"}, {}};
  for (std::size_t i = 0; i < ens.size(); ++i)
    for (std::size_t j = 0; j < ens.size(); ++j)
      gram.add({static_cast<std::int64_t>(i), static_cast<std::int64_t>(j), ens.gram(i, j)});
  emit.table(gram);
  if (res.direction) emit.snapshot("direction.snap", *res.direction);
  for (std::size_t i = 0; i < ens.size(); ++i) emit.snapshot("q_" + std::to_string(i) + ".snap", ens.q()[i]);
  if (res.status == CertificateStatus::inconclusive || !solver_ok) return kNotConverged;
  return kOk;
}

} // namespace detail

/// Run one command; writes tables, snapshots and `manifest.json` into out_dir.
/// Never throws for run failures: they are reported through the exit code and the manifest.
inline RunOutcome run(Command command, const ExperimentConfig& cfg, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override = std::nullopt) {
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const auto seed = seed_override ? seed_override : cfg.seed;
  try {
    std::filesystem::create_directories(out_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    out.exit_code = kValidation;
    out.status = "error";
    out.errors.push_back(std::string("cannot create output directory: ") + e.what());
    return out;
  }
  try {
    const int threads = thread_budget();
    if (is_stochastic(command)) detail::require_seed(seed, command_name(command));
    detail::Emitter emit(cfg, out_dir, out);
    switch (command) {
    case Command::curvature: detail::run_curvature(cfg, seed, emit); break;
    case Command::minimize: out.exit_code = detail::run_minimize(cfg, seed, threads, emit); break;
    case Command::multi_start: out.exit_code = detail::run_multi_start(cfg, seed, threads, emit); break;
    case Command::scan: detail::run_scan(cfg, emit); break;
    case Command::check_derivatives: out.exit_code = detail::run_check_derivatives(cfg, seed, emit); break;
    case Command::certify: out.exit_code = detail::run_certify(cfg, seed, threads, emit); break;
    }
    if (out.exit_code == kNotConverged) out.status = "not-converged";
  } catch (const std::exception& e) {
    out.exit_code = kValidation;
    out.status = "error";
    out.errors.push_back(e.what());
  }

  nlohmann::ordered_json m;
  m["tool"] = "yamabe-lab";
  m["version"] = version();
  m["command"] = command_name(command);
  m["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  m["config"] = cfg.echo;
  m["status"] = out.status;
  m["exit_code"] = out.exit_code;
  m["errors"] = out.errors;
  m["outputs"] = out.outputs;
  m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_file(out_dir + "/manifest.json", m.dump(2) + "\n");
  } catch (const std::exception& e) {
    out.exit_code = kValidation;
    out.status = "error";
    out.errors.push_back(e.what());
  }
  return out;
}

/// Load a config file and run; configuration errors still produce a manifest.
inline RunOutcome run_file(const std::string& command, const std::string& config_path, const std::string& out_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt) {
  ExperimentConfig cfg;
  Command cmd = Command::curvature;
  try {
    cmd = parse_command(command);
    const auto dir = std::filesystem::path(config_path).parent_path().string();
    cfg = parse_config(read_file(config_path), dir.empty() ? "." : dir);
  } catch (const std::exception& e) {
    RunOutcome out;
    out.exit_code = kValidation;
    out.status = "error";
    out.errors.push_back(e.what());
    try {
      std::filesystem::create_directories(out_dir);
      nlohmann::ordered_json m;
      m["tool"] = "yamabe-lab";
      m["version"] = version();
      m["command"] = command;
      m["seed"] = seed_override ? nlohmann::ordered_json(*seed_override) : nlohmann::ordered_json(nullptr);
      m["config"] = nullptr;
      m["status"] = out.status;
      m["exit_code"] = out.exit_code;
      m["errors"] = out.errors;
      m["outputs"] = nlohmann::ordered_json::array();
      m["wall_time_seconds"] = 0.0;
      write_file(out_dir + "/manifest.json", m.dump(2) + "\n");
    } catch (const std::exception& e2) {
      out.errors.push_back(e2.what());
    }
    return out;
  }
  return run(cmd, cfg, out_dir, seed_override);
}

} // namespace yamabe::lab
