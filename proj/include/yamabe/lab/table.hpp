#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "yamabe/errors.hpp"
#include "yamabe/snapshot.hpp"

namespace yamabe::lab {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

/// A homogeneous table with a fixed column order.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw ShapeError("table " + name + ": row width does not match header");
    rows.push_back(std::move(row));
  }
};

/// %.17g, with fixed spellings for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + csv_escape(t.columns[c]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      out += std::visit(
          [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) return format_double(v);
            else if constexpr (std::is_same_v<V, std::int64_t>) return std::to_string(v);
            else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
            else return csv_escape(v);
          },
          row[c]);
    }
    out += "\n";
  }
  return out;
}

/// {"columns": [...], "rows": [[...], ...]}; non-finite doubles become the strings "nan"/"inf"/"-inf".
inline nlohmann::ordered_json to_json(const Table& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& cell : row) {
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) {
              if (std::isfinite(v)) r.push_back(v);
              else r.push_back(format_double(v));
            } else {
              r.push_back(v);
            }
          },
          cell);
    }
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json j;
  j["columns"] = t.columns;
  j["rows"] = std::move(rows);
  return j;
}

inline std::string to_json_text(const Table& t) { return to_json(t).dump(2) + "\n"; }

/// Writes `<dir>/<name>.csv` and/or `<dir>/<name>.json`; returns the file names written.
inline std::vector<std::string> emit_table(const Table& t, const std::string& dir, bool csv, bool json) {
  std::vector<std::string> written;
  if (csv) {
    write_file(dir + "/" + t.name + ".csv", to_csv(t));
    written.push_back(t.name + ".csv");
  }
  if (json) {
    write_file(dir + "/" + t.name + ".json", to_json_text(t));
    written.push_back(t.name + ".json");
  }
  return written;
}

} // namespace yamabe::lab
