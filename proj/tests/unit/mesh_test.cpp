#include <gtest/gtest.h>

#include "trove/error.hpp"
#include "trove/mesh.hpp"

namespace trove {
namespace {

TEST(Mesh, BoxIsClosedWithVolume) {
  const auto m = box_mesh({4, 2, 1.5});
  EXPECT_EQ(m.triangles.size(), 12u);
  EXPECT_TRUE(m.is_closed());
  EXPECT_NEAR(m.signed_volume(), 12.0, 1e-12);
  const auto [lo, hi] = m.bounds();
  EXPECT_TRUE(lo.isApprox(Vec3(-2, -1, -0.75)));
  EXPECT_TRUE(hi.isApprox(Vec3(2, 1, 0.75)));
}

TEST(Mesh, AppendReindexes) {
  auto a = box_mesh({1, 1, 1});
  auto b = box_mesh({2, 2, 2});
  a.append(b);
  EXPECT_EQ(a.vertices.size(), 16u);
  EXPECT_EQ(a.triangles.size(), 24u);
  EXPECT_NEAR(a.signed_volume(), 9.0, 1e-12);
}

TEST(Triangulate, LShape) {
  const auto poly = Polygon2::from_points({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  const auto tris = triangulate(poly);
  ASSERT_EQ(tris.size(), 4u);
  double area = 0;
  for (const auto& t : tris) {
    const double a = cross2(poly[t[1]] - poly[t[0]], poly[t[2]] - poly[t[0]]) / 2;
    EXPECT_GT(a, 0.0);
    area += a;
  }
  EXPECT_NEAR(area, 3.0, 1e-12);
}

TEST(Obj, RoundTrip) {
  const auto m = box_mesh({1, 2, 3});
  EXPECT_EQ(parse_obj(write_obj(m)), m);
}

TEST(Obj, QuadFacesAreFannedAndNegativeIndicesResolve) {
  const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\nf -4 -3 -2\n");
  EXPECT_EQ(m.triangles.size(), 3u);
  EXPECT_NEAR(m.projected_area_xy(), 1.5, 1e-12);
}

TEST(Obj, BadIndexRejected) {
  EXPECT_THROW(parse_obj("v 0 0 0\nf 1 2 3\n"), Error);
}

}  // namespace
}  // namespace trove
