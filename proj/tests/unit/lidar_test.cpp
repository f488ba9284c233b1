#include <gtest/gtest.h>

#include <cstring>

#include "test_support.hpp"
#include "trove/error.hpp"
#include "trove/ingest.hpp"
#include "trove/raster_io.hpp"

namespace trove {
namespace {

LidarSweep five_points() {
  LidarSweep s;
  s.points = {{0, 0, 0, -1}, {1.5f, -2, 3, 2}, {10, 20, 1, 15}, {-4, 4, 2, 14}, {0.25f, 0, 6, 15}};
  return s;
}

Errc code_of(std::span<const std::byte> bytes) {
  try {
    parse_lidar_bytes(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::IoError;
}

TEST(Lidar, FivePointRoundTrip) {
  const auto s = five_points();
  const auto bytes = serialize_lidar(s);
  EXPECT_EQ(bytes.size(), 8u + 5u * 16u);
  const auto r = parse_lidar_bytes(bytes);
  EXPECT_EQ(r.sweep.points, s.points);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(serialize_lidar(r.sweep), bytes);
}

TEST(Lidar, VegetationLabels) {
  const auto r = parse_lidar_bytes(serialize_lidar(five_points()));
  int veg = 0;
  for (const auto& p : r.sweep.points) {
    veg += p.label == static_cast<int>(Class20::Trees) || p.label == static_cast<int>(Class20::Bushes);
  }
  EXPECT_EQ(veg, 3);
  EXPECT_TRUE(r.sweep.labeled());
}

TEST(Lidar, NaNIsNonFinitePoint) {
  auto s = five_points();
  s.points[2].z = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(code_of(serialize_lidar(s)), Errc::NonFinitePoint);
  s.points[2].z = std::numeric_limits<float>::infinity();
  EXPECT_EQ(code_of(serialize_lidar(s)), Errc::NonFinitePoint);
}

TEST(Lidar, TruncationAndHeader) {
  auto bytes = serialize_lidar(five_points());
  bytes.pop_back();
  EXPECT_EQ(code_of(bytes), Errc::TruncatedRecord);
  auto bad = serialize_lidar(five_points());
  bad[0] = std::byte{'X'};
  EXPECT_EQ(code_of(bad), Errc::TruncatedRecord);
  EXPECT_EQ(code_of({}), Errc::TruncatedRecord);
}

TEST(Lidar, UnknownLabelMapsToVoidWithWarning) {
  auto bytes = serialize_lidar(five_points());
  const float label = 77.0f;
  std::memcpy(bytes.data() + 8 + 16 + 12, &label, 4);
  const auto r = parse_lidar_bytes(bytes);
  EXPECT_EQ(r.sweep.points[1].label, 0);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].code, Errc::UnknownLabelId);
}

TEST(Lidar, FileRoundTripAndMissingFile) {
  test::TempDir dir("lidar");
  const auto bytes = serialize_lidar(five_points());
  write_binary_file(dir / "a.bin", {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  EXPECT_EQ(parse_lidar(dir / "a.bin").sweep.points.size(), 5u);
  try {
    parse_lidar(dir / "missing.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingFile);
  }
}

TEST(Lidar, UnlabeledSweep) {
  LidarSweep s;
  s.points = {{1, 2, 3, -1}, {4, 5, 6, -1}};
  EXPECT_FALSE(parse_lidar_bytes(serialize_lidar(s)).sweep.labeled());
}

}  // namespace
}  // namespace trove
