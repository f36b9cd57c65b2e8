#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "yamabe/chart.hpp"
#include "yamabe/lab/toml_lite.hpp"

namespace yamabe::lab {

enum class Command { curvature, minimize, multi_start, scan, check_derivatives, certify };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"curvature", "minimize",          "multi-start",
                                                 "scan",      "check-derivatives", "certify"};
  return names;
}

inline Command parse_command(const std::string& s) {
  const auto& names = command_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == s) return static_cast<Command>(i);
  throw ConfigError("unknown command '" + s + "'");
}

inline std::string command_name(Command c) { return command_names()[static_cast<std::size_t>(c)]; }

/// Stochastic commands need an explicit rng seed.
inline bool is_stochastic(Command c) {
  return c == Command::multi_start || c == Command::check_derivatives || c == Command::certify;
}

struct ChartSpec {
  std::string kind = "periodic"; // periodic | round-sphere | product-cylinder | flat-torus
  int dim = 3;
  std::vector<int> resolution;
  std::vector<double> period;
  double radius = 1.0;
  double length = 1.0;
  int samples = 0;
};

struct MetricSpec {
  std::string family = "flat"; // flat | conformal-bump | perturbed
  double amplitude = 0.0;
  int modes = 1;
  double scale = 1.0;
};

struct SolverSpec {
  double tol = 1e-8;
  int max_iter = 5000;
  int seeds = 5;
  double dedup_tol = 1e-3;
  bool continuation = false;
};

struct ScanSpec {
  double l_min = 4.0;
  double l_max = 10.0;
  int steps = 60;
};

struct DerivativeSpec {
  int directions = 20;
  double epsilon = 1e-4;
  double tolerance = 1e-4;
  int max_mode = 1; // largest |wavenumber| of the random directions
};

struct CertifySpec {
  std::string source = "metric"; // metric | multi-start | manifest
  std::string manifest;
  int directions = 100;
  double tol = 1e-7;
};

struct OutputSpec {
  bool csv = true;
  bool json = true;
  bool snapshots = true;
};

/// A validated experiment description.
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  ChartSpec chart;
  MetricSpec metric;
  SolverSpec solver;
  ScanSpec scan;
  DerivativeSpec derivatives;
  CertifySpec certify;
  OutputSpec output;
  nlohmann::ordered_json echo; ///< the parsed config, for the run manifest
  std::string base_dir;        ///< directory of the config file (relative paths resolve here)
};

namespace detail {

class Section {
public:
  Section(const std::string& name, const std::map<std::string, TomlValue>* table) : name_(name), table_(table) {}

  void allow(std::initializer_list<const char*> keys) const {
    if (table_ == nullptr) return;
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : *table_)
      if (ok.count(k) == 0) throw ConfigError("unknown key '" + k + "' in " + where());
  }

  const TomlValue* find(const char* key) const {
    if (table_ == nullptr) return nullptr;
    const auto it = table_->find(key);
    return it == table_->end() ? nullptr : &it->second;
  }

  void get(const char* key, double& out) const {
    if (const auto* v = find(key)) out = number(*v, key);
  }
  void get(const char* key, int& out) const {
    if (const auto* v = find(key)) out = integer(*v, key);
  }
  void get(const char* key, bool& out) const {
    if (const auto* v = find(key)) {
      if (!v->is_bool()) throw ConfigError(where(key) + " must be a boolean");
      out = std::get<bool>(v->v);
    }
  }
  void get(const char* key, std::string& out) const {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = std::get<std::string>(v->v);
    }
  }
  /// A scalar or an array of scalars.
  void get(const char* key, std::vector<int>& out) const {
    if (const auto* v = find(key)) {
      out.clear();
      if (v->is_array()) {
        for (const auto& e : std::get<TomlArray>(v->v)) out.push_back(integer(e, key));
      } else {
        out.push_back(integer(*v, key));
      }
    }
  }
  void get(const char* key, std::vector<double>& out) const {
    if (const auto* v = find(key)) {
      out.clear();
      if (v->is_array()) {
        for (const auto& e : std::get<TomlArray>(v->v)) out.push_back(number(e, key));
      } else {
        out.push_back(number(*v, key));
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) const {
    if (const auto* v = find(key)) {
      out.clear();
      if (!v->is_array()) throw ConfigError(where(key) + " must be an array of strings");
      for (const auto& e : std::get<TomlArray>(v->v)) {
        if (!e.is_string()) throw ConfigError(where(key) + " must be an array of strings");
        out.push_back(std::get<std::string>(e.v));
      }
    }
  }

  std::string where(const char* key = nullptr) const {
    const std::string sec = name_.empty() ? "top level" : "[" + name_ + "]";
    return key ? sec + " key '" + key + "'" : sec;
  }

private:
  double number(const TomlValue& v, const char* key) const {
    if (v.is_float()) return std::get<double>(v.v);
    if (v.is_int()) return static_cast<double>(std::get<std::int64_t>(v.v));
    throw ConfigError(where(key) + " must be a number");
  }
  int integer(const TomlValue& v, const char* key) const {
    if (!v.is_int()) throw ConfigError(where(key) + " must be an integer");
    const auto x = std::get<std::int64_t>(v.v);
    if (x < -2147483647 || x > 2147483647) throw ConfigError(where(key) + " out of range");
    return static_cast<int>(x);
  }

  std::string name_;
  const std::map<std::string, TomlValue>* table_;
};

inline nlohmann::ordered_json value_to_json(const TomlValue& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::ordered_json {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, TomlArray>) {
          auto a = nlohmann::ordered_json::array();
          for (const auto& e : x) a.push_back(value_to_json(e));
          return a;
        } else {
          return x;
        }
      },
      v.v);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

} // namespace detail

/// Parse and validate a config document. Unknown sections and keys are errors.
inline ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".") {
  const auto doc = parse_toml(text);
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  const std::set<std::string> sections = {"", "chart", "metric", "solver", "scan", "derivatives", "certify", "output"};
  for (const auto& [name, table] : doc) {
    if (sections.count(name) == 0) throw ConfigError("unknown section [" + name + "]");
    auto& e = name.empty() ? cfg.echo : cfg.echo[name];
    if (!name.empty()) e = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table) e[k] = detail::value_to_json(v);
  }
  auto sec = [&](const char* name) {
    const auto it = doc.find(name);
    return detail::Section(name, it == doc.end() ? nullptr : &it->second);
  };
  using detail::require;

  const auto top = sec("");
  top.allow({"seed"});
  if (const auto* s = top.find("seed")) {
    require(s->is_int() && std::get<std::int64_t>(s->v) >= 0, "top level key 'seed' must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(std::get<std::int64_t>(s->v));
  }

  const auto chart = sec("chart");
  chart.allow({"kind", "dim", "resolution", "period", "radius", "length", "samples"});
  chart.get("kind", cfg.chart.kind);
  chart.get("dim", cfg.chart.dim);
  chart.get("resolution", cfg.chart.resolution);
  chart.get("period", cfg.chart.period);
  chart.get("radius", cfg.chart.radius);
  chart.get("length", cfg.chart.length);
  chart.get("samples", cfg.chart.samples);
  auto& c = cfg.chart;
  require(c.kind == "periodic" || c.kind == "round-sphere" || c.kind == "product-cylinder" || c.kind == "flat-torus",
          "[chart] kind must be periodic, round-sphere, product-cylinder or flat-torus");
  require(c.dim >= 2 && c.dim <= 8, "[chart] dim must be between 2 and 8");
  if (c.kind == "periodic") {
    if (c.resolution.empty()) c.resolution = {16};
    if (c.period.empty()) c.period = {1.0};
    if (c.resolution.size() == 1) c.resolution.assign(static_cast<std::size_t>(c.dim), c.resolution[0]);
    if (c.period.size() == 1) c.period.assign(static_cast<std::size_t>(c.dim), c.period[0]);
    require(static_cast<int>(c.resolution.size()) == c.dim, "[chart] resolution needs one entry per dimension");
    require(static_cast<int>(c.period.size()) == c.dim, "[chart] period needs one entry per dimension");
  }
  if (c.kind == "flat-torus") {
    if (c.period.empty()) c.period = {1.0};
    if (c.period.size() == 1) c.period.assign(static_cast<std::size_t>(c.dim), c.period[0]);
    require(static_cast<int>(c.period.size()) == c.dim, "[chart] period needs one entry per dimension");
  }
  for (double p : c.period) require(std::isfinite(p) && p > 0.0, "[chart] periods must be positive");
  require(std::isfinite(c.radius) && c.radius > 0.0, "[chart] radius must be positive");
  require(std::isfinite(c.length) && c.length > 0.0, "[chart] length must be positive");
  require(c.samples >= 0, "[chart] samples must be non-negative");

  const auto metric = sec("metric");
  metric.allow({"family", "amplitude", "modes", "scale"});
  metric.get("family", cfg.metric.family);
  metric.get("amplitude", cfg.metric.amplitude);
  metric.get("modes", cfg.metric.modes);
  metric.get("scale", cfg.metric.scale);
  require(cfg.metric.family == "flat" || cfg.metric.family == "conformal-bump" || cfg.metric.family == "perturbed",
          "[metric] family must be flat, conformal-bump or perturbed");
  require(std::isfinite(cfg.metric.scale) && cfg.metric.scale > 0.0, "[metric] scale must be positive");
  require(std::isfinite(cfg.metric.amplitude) && cfg.metric.amplitude >= 0.0 && cfg.metric.amplitude < 0.5,
          "[metric] amplitude must lie in [0, 0.5)");
  require(cfg.metric.modes >= 1 && cfg.metric.modes <= 8, "[metric] modes must lie in [1, 8]");
  if (c.kind != "periodic")
    require(cfg.metric.family == "flat", "[metric] model charts support only the flat (canonical) family");

  const auto solver = sec("solver");
  solver.allow({"tol", "max_iter", "seeds", "dedup_tol", "continuation"});
  solver.get("tol", cfg.solver.tol);
  solver.get("max_iter", cfg.solver.max_iter);
  solver.get("seeds", cfg.solver.seeds);
  solver.get("dedup_tol", cfg.solver.dedup_tol);
  solver.get("continuation", cfg.solver.continuation);
  require(cfg.solver.tol > 0.0, "[solver] tol must be positive");
  require(cfg.solver.max_iter >= 0, "[solver] max_iter must be non-negative");
  require(cfg.solver.seeds >= 1, "[solver] seeds must be at least 1");
  require(cfg.solver.dedup_tol > 0.0, "[solver] dedup_tol must be positive");

  const auto scan = sec("scan");
  scan.allow({"l_min", "l_max", "steps"});
  scan.get("l_min", cfg.scan.l_min);
  scan.get("l_max", cfg.scan.l_max);
  scan.get("steps", cfg.scan.steps);
  require(cfg.scan.l_min > 0.0 && cfg.scan.l_max >= cfg.scan.l_min, "[scan] need 0 < l_min <= l_max");
  require(cfg.scan.steps >= 1, "[scan] steps must be at least 1");

  const auto der = sec("derivatives");
  der.allow({"directions", "epsilon", "tolerance", "max_mode"});
  der.get("directions", cfg.derivatives.directions);
  der.get("epsilon", cfg.derivatives.epsilon);
  der.get("tolerance", cfg.derivatives.tolerance);
  der.get("max_mode", cfg.derivatives.max_mode);
  require(cfg.derivatives.directions >= 1, "[derivatives] directions must be at least 1");
  require(cfg.derivatives.epsilon > 0.0, "[derivatives] epsilon must be positive");
  require(cfg.derivatives.tolerance > 0.0, "[derivatives] tolerance must be positive");
  require(cfg.derivatives.max_mode >= 1 && cfg.derivatives.max_mode <= 8, "[derivatives] max_mode must be in [1, 8]");

  const auto cert = sec("certify");
  cert.allow({"source", "manifest", "directions", "tol"});
  cert.get("source", cfg.certify.source);
  cert.get("manifest", cfg.certify.manifest);
  cert.get("directions", cfg.certify.directions);
  cert.get("tol", cfg.certify.tol);
  require(cfg.certify.source == "metric" || cfg.certify.source == "multi-start" || cfg.certify.source == "manifest",
          "[certify] source must be metric, multi-start or manifest");
  require(cfg.certify.source != "manifest" || !cfg.certify.manifest.empty(),
          "[certify] source = \"manifest\" needs a manifest path");
  require(cfg.certify.directions >= 0, "[certify] directions must be non-negative");
  require(cfg.certify.tol > 0.0, "[certify] tol must be positive");

  const auto out = sec("output");
  out.allow({"formats", "snapshots"});
  std::vector<std::string> formats = {"csv", "json"};
  out.get("formats", formats);
  cfg.output.csv = cfg.output.json = false;
  for (const auto& f : formats) {
    if (f == "csv") cfg.output.csv = true;
    else if (f == "json") cfg.output.json = true;
    else throw ConfigError("[output] formats entries must be \"csv\" or \"json\"");
  }
  out.get("snapshots", cfg.output.snapshots);
  return cfg;
}

/// The chart described by a config.
inline GridChart make_chart(const ChartSpec& c) {
  if (c.kind == "periodic") return GridChart::periodic(c.dim, c.resolution, c.period);
  if (c.kind == "round-sphere") return GridChart::round_sphere(c.dim, c.radius);
  if (c.kind == "product-cylinder") return GridChart::product_cylinder(c.dim, c.length, c.radius, c.samples);
  return GridChart::flat_torus(c.period);
}

} // namespace yamabe::lab
