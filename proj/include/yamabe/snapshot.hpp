#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "yamabe/chart.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/fields.hpp"

namespace yamabe {

enum class SnapshotKind : std::uint32_t { scalar = 1, tensor = 2, metric = 3 };

/// A decoded field snapshot (see docs/snapshot-format.md).
struct Snapshot {
  SnapshotKind kind = SnapshotKind::scalar;
  GridChart chart = GridChart::periodic(2, 8);
  Weight weight;
  std::vector<double> values;

  ScalarField scalar() const {
    if (kind != SnapshotKind::scalar) throw IoError("snapshot does not hold a scalar field");
    return {chart, values, weight};
  }
  SymTensorField tensor() const {
    if (kind == SnapshotKind::scalar) throw IoError("snapshot does not hold a tensor field");
    return {chart, values, weight};
  }
  MetricField metric() const {
    if (kind != SnapshotKind::metric) throw IoError("snapshot does not hold a metric");
    return MetricField(tensor());
  }
};

namespace detail {

inline constexpr char kSnapshotMagic[8] = {'Y', 'A', 'M', 'S', 'N', 'A', 'P', '1'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

class ByteWriter {
public:
  template <class T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    bytes_.append(reinterpret_cast<const char*>(b), sizeof(T));
  }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  std::string take() { return std::move(bytes_); }

private:
  std::string bytes_;
};

class ByteReader {
public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw IoError("snapshot truncated");
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  void raw(char* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("snapshot truncated");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

inline std::uint32_t chart_code(const GridChart& c) { return static_cast<std::uint32_t>(c.kind().index()); }

inline std::vector<double> chart_params(const GridChart& c) {
  return std::visit(
      [](const auto& k) -> std::vector<double> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PeriodicGrid>) return {};
        else if constexpr (std::is_same_v<K, RoundSphere>) return {k.radius};
        else if constexpr (std::is_same_v<K, ProductCylinder>) return {k.length, k.sphere_radius};
        else return k.periods;
      },
      c.kind());
}

inline GridChart rebuild_chart(std::uint32_t code, int dim, const std::vector<double>& params,
                               const std::vector<int>& res, const std::vector<double>& periods) {
  switch (code) {
  case 0: return GridChart::periodic(dim, res, periods);
  case 1:
    if (params.size() != 1 || !res.empty()) throw IoError("bad round-sphere chart record");
    return GridChart::round_sphere(dim, params[0]);
  case 2:
    if (params.size() != 2 || res.size() > 1) throw IoError("bad product-cylinder chart record");
    return GridChart::product_cylinder(dim, params[0], params[1], res.empty() ? 0 : res[0]);
  case 3:
    if (static_cast<int>(params.size()) != dim || !res.empty()) throw IoError("bad flat-torus chart record");
    return GridChart::flat_torus(params);
  default: throw IoError("unknown chart kind " + std::to_string(code));
  }
}

} // namespace detail

/// Encode a field as snapshot bytes.
inline std::string encode_snapshot(SnapshotKind kind, const GridChart& chart, Weight weight,
                                   std::span<const double> values) {
  const auto components = kind == SnapshotKind::scalar ? 1u : static_cast<std::uint32_t>(chart.dim() * chart.dim());
  if (values.size() != chart.node_count() * components) throw ShapeError("snapshot value count does not match chart");
  detail::ByteWriter w;
  w.raw(detail::kSnapshotMagic, sizeof detail::kSnapshotMagic);
  w.put(detail::kSnapshotVersion);
  w.put(static_cast<std::uint32_t>(kind));
  w.put(static_cast<std::uint32_t>(chart.dim()));
  w.put(detail::chart_code(chart));
  const auto params = detail::chart_params(chart);
  w.put(static_cast<std::uint32_t>(params.size()));
  for (double p : params) w.put(p);
  w.put(static_cast<std::uint32_t>(chart.axis_count()));
  for (std::size_t a = 0; a < chart.axis_count(); ++a) {
    w.put(static_cast<std::uint32_t>(chart.resolution()[a]));
    w.put(chart.periods()[a]);
  }
  w.put(static_cast<std::int64_t>(weight.num()));
  w.put(static_cast<std::int64_t>(weight.den()));
  w.put(components);
  w.put(static_cast<std::uint64_t>(chart.node_count()));
  for (double v : values) w.put(v);
  return w.take();
}

inline std::string encode_snapshot(const ScalarField& f) {
  return encode_snapshot(SnapshotKind::scalar, f.chart(), f.weight(), f.values());
}
inline std::string encode_snapshot(const SymTensorField& t) {
  return encode_snapshot(SnapshotKind::tensor, t.chart(), t.weight(), t.values());
}
inline std::string encode_snapshot(const MetricField& g) {
  return encode_snapshot(SnapshotKind::metric, g.chart(), Weight{}, g.tensor().values());
}

inline Snapshot decode_snapshot(const std::string& bytes) {
  detail::ByteReader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, detail::kSnapshotMagic, 8) != 0) throw IoError("not a field snapshot (bad magic)");
  if (const auto version = r.get<std::uint32_t>(); version != detail::kSnapshotVersion)
    throw IoError("unsupported snapshot version " + std::to_string(version));
  const auto kind = r.get<std::uint32_t>();
  if (kind < 1 || kind > 3) throw IoError("unknown snapshot field kind " + std::to_string(kind));
  const auto dim = static_cast<int>(r.get<std::uint32_t>());
  if (dim < 2 || dim > kMaxDim) throw IoError("snapshot dimension out of range");
  const auto code = r.get<std::uint32_t>();
  const auto nparams = r.get<std::uint32_t>();
  if (nparams > 64) throw IoError("snapshot chart record too large");
  std::vector<double> params(nparams);
  for (double& p : params) p = r.get<double>();
  const auto axes = r.get<std::uint32_t>();
  if (axes > static_cast<std::uint32_t>(dim)) throw IoError("snapshot has more axes than dimensions");
  std::vector<int> res(axes);
  std::vector<double> periods(axes);
  for (std::uint32_t a = 0; a < axes; ++a) {
    res[a] = static_cast<int>(r.get<std::uint32_t>());
    periods[a] = r.get<double>();
  }
  const auto num = r.get<std::int64_t>();
  const auto den = r.get<std::int64_t>();
  if (den <= 0) throw IoError("snapshot weight has non-positive denominator");
  const auto components = r.get<std::uint32_t>();
  const auto nodes = r.get<std::uint64_t>();
  std::optional<GridChart> chart;
  try {
    chart = detail::rebuild_chart(code, dim, params, res, periods);
  } catch (const ShapeError& e) {
    throw IoError(std::string("invalid chart record in snapshot: ") + e.what());
  }
  Snapshot s{static_cast<SnapshotKind>(kind), *chart, Weight(num, den), {}};
  const auto expect = s.kind == SnapshotKind::scalar ? 1u : static_cast<std::uint32_t>(dim * dim);
  if (components != expect) throw IoError("snapshot component count does not match field kind");
  if (nodes != s.chart.node_count()) throw IoError("snapshot node count does not match chart");
  s.values.resize(nodes * components);
  for (double& v : s.values) v = r.get<double>();
  if (!r.done()) throw IoError("trailing bytes after snapshot body");
  return s;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class Field>
void write_snapshot(const std::string& path, const Field& f) {
  write_file(path, encode_snapshot(f));
}

inline Snapshot read_snapshot(const std::string& path) { return decode_snapshot(read_file(path)); }

} // namespace yamabe
