#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "support/oracles.hpp"
#include "yamabe/yamabe.hpp"

using namespace yamabe;

namespace {

void expect_same_chart(const GridChart& a, const GridChart& b) {
  EXPECT_EQ(a.dim(), b.dim());
  EXPECT_EQ(a.kind_name(), b.kind_name());
  EXPECT_EQ(a.resolution(), b.resolution());
  EXPECT_EQ(a.periods(), b.periods());
  EXPECT_TRUE(a.same_shape(b));
}

std::vector<GridChart> charts() {
  return {GridChart::periodic(3, std::vector<int>{10, 8, 12}, std::vector<double>{1.0, 2.5, 0.75}),
          GridChart::periodic(2, 8),
          GridChart::round_sphere(4, 1.5),
          GridChart::product_cylinder(3, 7.25, 1.0, 32),
          GridChart::product_cylinder(5, 3.0, 2.0),
          GridChart::flat_torus({1.0, 2.0, 3.0})};
}

} // namespace

TEST(Snapshot, ScalarRoundTripIsBitExact) {
  auto rng = seeded_stream(61, 0);
  for (const auto& chart : charts()) {
    const auto f = ScalarField(chart, random_trig_field(chart, rng), Weight(-2, 3));
    const auto s = decode_snapshot(encode_snapshot(f));
    EXPECT_EQ(s.kind, SnapshotKind::scalar);
    expect_same_chart(s.chart, chart);
    EXPECT_EQ(s.weight, Weight(-2, 3));
    const auto g = s.scalar();
    ASSERT_EQ(g.size(), f.size());
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(g[k], f[k]);
    EXPECT_THROW(s.tensor(), IoError);
  }
}

TEST(Snapshot, TensorAndMetricRoundTrip) {
  auto rng = seeded_stream(62, 0);
  const auto chart = GridChart::periodic(3, 8);
  const auto t = oracle::random_symmetric(chart, rng, Weight(1, 3));
  const auto st = decode_snapshot(encode_snapshot(t));
  EXPECT_EQ(st.kind, SnapshotKind::tensor);
  EXPECT_EQ(st.weight, Weight(1, 3));
  const auto back = st.tensor();
  EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), t.values().begin(), t.values().end()));
  EXPECT_THROW(st.metric(), IoError);
  EXPECT_THROW(st.scalar(), IoError);

  const auto g = oracle::perturbed_torus(chart, rng, 0.1);
  const auto sg = decode_snapshot(encode_snapshot(g));
  EXPECT_EQ(sg.kind, SnapshotKind::metric);
  const auto gb = sg.metric();
  EXPECT_TRUE(std::equal(gb.tensor().values().begin(), gb.tensor().values().end(), g.tensor().values().begin(),
                         g.tensor().values().end()));
  // re-encoding the decoded field reproduces the bytes
  EXPECT_EQ(encode_snapshot(gb), encode_snapshot(g));
}

TEST(Snapshot, ModelMetricRoundTrip) {
  for (const auto& chart : {GridChart::round_sphere(3, 2.0), GridChart::product_cylinder(4, 6.0)}) {
    const auto g = MetricField::canonical(chart, 1.75);
    const auto back = decode_snapshot(encode_snapshot(g)).metric();
    EXPECT_EQ(back.model_scale(), 1.75);
    EXPECT_EQ(scalar_curvature(back)[0], scalar_curvature(g)[0]);
  }
}

TEST(Snapshot, HeaderLayout) {
  const auto bytes = encode_snapshot(ScalarField::constant(GridChart::periodic(2, 8), 1.0));
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 8), "YAMSNAP1");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  EXPECT_EQ(version, 1u);
  // last f64 value at the end
  double last = 0.0;
  std::memcpy(&last, bytes.data() + bytes.size() - 8, 8);
  EXPECT_EQ(last, 1.0);
}

TEST(Snapshot, CorruptionIsRejected) {
  const auto good = encode_snapshot(ScalarField::constant(GridChart::periodic(3, 8), 2.0));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad_magic), IoError);
  auto bad_version = good;
  bad_version[8] = 2;
  EXPECT_THROW(decode_snapshot(bad_version), IoError);
  auto bad_kind = good;
  bad_kind[12] = 9;
  EXPECT_THROW(decode_snapshot(bad_kind), IoError);
  EXPECT_THROW(decode_snapshot(good.substr(0, good.size() - 1)), IoError);
  EXPECT_THROW(decode_snapshot(good.substr(0, 10)), IoError);
  EXPECT_THROW(decode_snapshot(""), IoError);
  EXPECT_THROW(decode_snapshot(good + std::string(1, '\0')), IoError);
  // every strict prefix fails cleanly
  for (std::size_t len = 0; len < good.size(); len += 7) EXPECT_THROW(decode_snapshot(good.substr(0, len)), IoError);
}

TEST(Snapshot, FileRoundTripAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "yamabe_snapshot_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "f.snap").string();
  const auto f = ScalarField::constant(GridChart::periodic(3, 8), 0.5);
  write_snapshot(path, f);
  EXPECT_EQ(read_snapshot(path).scalar()[5], 0.5);
  EXPECT_THROW(read_snapshot((dir / "missing.snap").string()), IoError);
  EXPECT_THROW(write_snapshot((dir / "no" / "such" / "dir.snap").string(), f), IoError);
  std::filesystem::remove_all(dir);
}
