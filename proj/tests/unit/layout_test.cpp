#include <gtest/gtest.h>

#include "test_support.hpp"
#include "trove/error.hpp"
#include "trove/layout.hpp"

namespace trove {
namespace {

Polygon2 rect(const Vec2& c, double l, double w, double yaw) {
  const auto k = OrientedBox2{c, {l / 2, w / 2}, yaw}.corners();
  return Polygon2::from_points({k.begin(), k.end()});
}

Polygon2 star(int spikes, double r_out, double r_in, double phase) {
  std::vector<Vec2> pts;
  for (int i = 0; i < 2 * spikes; ++i) {
    const double r = i % 2 ? r_in : r_out;
    const double a = phase + kPi * i / spikes;
    pts.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return Polygon2::from_points(pts);
}

Polygon2 l_shape(double s = 1.0) {
  return Polygon2::from_points({{0, 0}, {2 * s, 0}, {2 * s, s}, {s, s}, {s, 2 * s}, {0, 2 * s}});
}

double orientation_error(double a, double b) {
  const double d = std::abs(wrap_orientation(a) - wrap_orientation(b));
  return std::min(d, kPi - d);
}

TEST(Histogram, UnitSquare18Bins) {
  const auto h = orientation_histogram(rect({0.5, 0.5}, 1, 1, 0), 18);
  EXPECT_DOUBLE_EQ(h.weights[0], 2.0);
  EXPECT_DOUBLE_EQ(h.weights[9], 2.0);
  double rest = 0;
  for (int i = 0; i < 18; ++i) rest += (i == 0 || i == 9) ? 0 : h.weights[i];
  EXPECT_EQ(rest, 0.0);
}

TEST(Histogram, RotatedRectangle) {
  // nudge off the bin boundary so floating point decides nothing
  const double yaw = (30.0 + 1.0) * kPi / 180.0;
  const auto h = orientation_histogram(rect({0, 0}, 4, 2, yaw), 36);
  EXPECT_NEAR(h.weights[h.bin_of(yaw)], 8.0, 1e-9);
  EXPECT_NEAR(h.weights[h.bin_of(yaw + kPi / 2)], 4.0, 1e-9);
  EXPECT_EQ(h.bin_of(yaw), 6);
  EXPECT_EQ(h.bin_of(yaw + kPi / 2), 24);
}

TEST(Histogram, RegularHexagon) {
  std::vector<Vec2> pts;
  for (int i = 0; i < 6; ++i) pts.emplace_back(std::cos(0.1 + i * kPi / 3), std::sin(0.1 + i * kPi / 3));
  const auto h = orientation_histogram(Polygon2::from_points(pts), 36);
  std::vector<int> nonzero;
  for (int i = 0; i < 36; ++i) {
    if (h.weights[i] > 0) nonzero.push_back(i);
  }
  ASSERT_EQ(nonzero.size(), 3u);
  EXPECT_NEAR(h.weights[nonzero[0]], 2.0, 1e-9);
  EXPECT_NEAR(h.weights[nonzero[1]], 2.0, 1e-9);
  EXPECT_NEAR(h.weights[nonzero[2]], 2.0, 1e-9);
  EXPECT_EQ(nonzero[1] - nonzero[0], 12);
  EXPECT_EQ(nonzero[2] - nonzero[1], 12);
}

TEST(Histogram, TotalEqualsPerimeter) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto p = star(5 + static_cast<int>(rng.index(5)), rng.uniform(5, 10), rng.uniform(1, 4), rng.uniform(0, 3));
    const auto h = orientation_histogram(p, 36);
    EXPECT_NEAR(h.total(), p.perimeter(), 1e-9 * p.perimeter());
  }
}

TEST(Histogram, TooFewBins) { EXPECT_THROW(orientation_histogram(rect({0, 0}, 1, 1, 0), 4), Error); }

TEST(Classify, UnitSquare) {
  const auto c = classify_building(rect({0.5, 0.5}, 1, 1, 0));
  const auto* r = std::get_if<RectReplace>(&c);
  ASSERT_NE(r, nullptr);
  EXPECT_NEAR(orientation_error(r->yaw, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(r->extents.x(), 1.0, 1e-12);
  EXPECT_NEAR(r->extents.y(), 1.0, 1e-12);
  EXPECT_NEAR(r->center.x(), 0.5, 1e-12);
  EXPECT_NEAR(r->center.y(), 0.5, 1e-12);
}

TEST(Classify, JitteredRectangles) {
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    const double l = rng.uniform(3, 40), w = rng.uniform(3, 40), yaw = rng.uniform(0, kPi);
    const Vec2 c(rng.uniform(-100, 100), rng.uniform(-100, 100));
    auto k = OrientedBox2{c, {l / 2, w / 2}, yaw}.corners();
    for (auto& p : k) {
      const double a = rng.uniform(0, 2 * kPi), r = rng.uniform(0, 0.02);
      p += Vec2(r * std::cos(a), r * std::sin(a));
    }
    const auto cls = classify_building(Polygon2::from_points({k.begin(), k.end()}));
    const auto* rr = std::get_if<RectReplace>(&cls);
    ASSERT_NE(rr, nullptr) << i;
    // a square's orientation is only defined modulo pi/2
    double err = orientation_error(rr->yaw, yaw);
    err = std::min(err, orientation_error(rr->yaw, yaw + kPi / 2));
    EXPECT_LT(err, 2.0 * kPi / 180.0) << i;
  }
}

TEST(Classify, StarsAreFacadeTexture) {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const auto p = star(5 + static_cast<int>(rng.index(4)), rng.uniform(8, 20), rng.uniform(2, 5), rng.uniform(0, kPi));
    EXPECT_TRUE(std::holds_alternative<FacadeTexture>(classify_building(p))) << i;
  }
}

// L-shape in the unit square with arms of width t = 1 - sqrt(0.4): area
// 1 - u^2 and hull area 1 - u^2 / 2 with u = 1 - t, so area / hull = 0.75.
Polygon2 thin_l_shape(double s = 1.0) {
  const double t = (1.0 - std::sqrt(0.4)) * s;
  return Polygon2::from_points({{0, 0}, {s, 0}, {s, t}, {t, t}, {t, s}, {0, s}});
}

TEST(Classify, LShapeAreaRatioFlag) {
  EXPECT_TRUE(std::holds_alternative<RectReplace>(classify_building(thin_l_shape(10))));
  LayoutConfig cfg;
  cfg.use_area_ratio = true;
  cfg.rect_ratio = 0.85;
  EXPECT_TRUE(std::holds_alternative<FacadeTexture>(classify_building(thin_l_shape(10), cfg)));
  const auto& v = thin_l_shape().vertices();
  EXPECT_NEAR(polygon_area(thin_l_shape()) / polygon_area(convex_hull(v)), 0.75, 1e-12);
  // the fat L (arms half the side) has area / hull = 3 / 3.5 and passes at 0.85
  EXPECT_NEAR(polygon_area(l_shape()) / polygon_area(convex_hull(l_shape().vertices())), 3.0 / 3.5, 1e-12);
  EXPECT_TRUE(std::holds_alternative<RectReplace>(classify_building(l_shape(), cfg)));
  cfg.rect_ratio = 0.9;
  EXPECT_TRUE(std::holds_alternative<FacadeTexture>(classify_building(l_shape(), cfg)));
}

TEST(Classify, RotationEquivariant) {
  Rng rng(8);
  const auto base = rect({0, 0}, 17, 9, 0.2);
  const auto r0 = std::get<RectReplace>(classify_building(base));
  for (int i = 0; i < 50; ++i) {
    const double phi = rng.uniform(0, kPi);
    const Eigen::Rotation2Dd rot(phi);
    std::vector<Vec2> pts;
    for (const auto& p : base.vertices()) pts.push_back(rot * p);
    const auto r = std::get<RectReplace>(classify_building(Polygon2::from_points(pts)));
    EXPECT_LT(orientation_error(r.yaw, r0.yaw + phi), kPi / 180.0);
  }
}

TEST(Classify, ScaleInvariantOutcome) {
  for (double s : {0.1, 1.0, 10.0, 250.0}) {
    EXPECT_TRUE(std::holds_alternative<RectReplace>(classify_building(rect({0, 0}, 4 * s, 3 * s, 0.4))));
    EXPECT_TRUE(std::holds_alternative<FacadeTexture>(classify_building(star(6, 10 * s, 3 * s, 0.1))));
  }
}

TEST(Extrude, UnitSquareHeight3) {
  BuildingPlan plan{1, rect({0.5, 0.5}, 1, 1, 0), FacadeTexture{}, 3.0};
  const auto m = extrude_building(plan);
  EXPECT_EQ(m.triangles.size(), 12u);
  EXPECT_NEAR(m.signed_volume(), 3.0, 1e-12);
  EXPECT_TRUE(m.is_closed());
}

TEST(Extrude, TriangleFootprint) {
  BuildingPlan plan{1, Polygon2::from_points({{0, 0}, {4, 0}, {0, 3}}), FacadeTexture{}, 2.0};
  const auto m = extrude_building(plan);
  EXPECT_EQ(m.triangles.size(), 8u);
  EXPECT_NEAR(m.signed_volume(), 12.0, 1e-12);
  EXPECT_TRUE(m.is_closed());
}

TEST(Extrude, LShapeClosedPositiveVolume) {
  BuildingPlan plan{1, l_shape(5), FacadeTexture{}, 7.0};
  const auto m = extrude_building(plan);
  EXPECT_TRUE(m.is_closed());
  EXPECT_NEAR(m.signed_volume(), 75.0 * 7.0, 1e-9);
}

TEST(Height, Rules) {
  OsmBuilding b{1, rect({0, 0}, 1, 1, 0), std::nullopt, std::nullopt};
  EXPECT_DOUBLE_EQ(building_height(b), 10.0);
  b.levels = 4;
  EXPECT_DOUBLE_EQ(building_height(b), 12.0);
  b.height = 17.5;
  EXPECT_DOUBLE_EQ(building_height(b), 17.5);
}

double mesh_area(const TriangleMesh& m) { return m.projected_area_xy(); }

TEST(Roads, StraightRibbonArea) {
  const std::vector<Vec2> line = {{0, 0}, {10, 0}};
  EXPECT_NEAR(mesh_area(ribbon_mesh(line, 4.0, 0.0)), 40.0, 1e-6);
}

TEST(Roads, RightAngleMiterHasNoOverlap) {
  const std::vector<Vec2> line = {{0, 0}, {10, 0}, {10, 10}};
  const auto m = ribbon_mesh(line, 2.0, 0.0);
  // area of the mitered L: two 10x2 strips minus nothing, plus the corner square
  EXPECT_NEAR(mesh_area(m), 2 * 10 * 2.0, 1e-9);
  Rng rng(12);
  int max_cover = 0;
  for (int i = 0; i < 200000; ++i) {
    const Vec2 p(rng.uniform(-2, 12), rng.uniform(-2, 12));
    int cover = 0;
    for (const auto& t : m.triangles) {
      const Vec2 a = m.vertices[t[0]].head<2>(), b = m.vertices[t[1]].head<2>(), c = m.vertices[t[2]].head<2>();
      // strict interior so shared edges do not double count
      const double d1 = cross2(b - a, p - a), d2 = cross2(c - b, p - b), d3 = cross2(a - c, p - c);
      const bool pos = d1 > 1e-9 && d2 > 1e-9 && d3 > 1e-9;
      const bool neg = d1 < -1e-9 && d2 < -1e-9 && d3 < -1e-9;
      cover += pos || neg;
    }
    max_cover = std::max(max_cover, cover);
  }
  EXPECT_LE(max_cover, 1);
}

TEST(Roads, SharedEndpointWelded) {
  std::vector<OsmRoad> roads(2);
  roads[0].id = 1;
  roads[0].highway_class = "residential";
  roads[0].centerline = {{0, 0}, {10, 0}};
  roads[1].id = 2;
  roads[1].highway_class = "residential";
  roads[1].centerline = {{10.2, 0.1}, {10, 10}};
  const std::vector<double> widths = {4.0, 4.0};
  const auto net = build_road_network(roads, widths);
  ASSERT_EQ(net.plans.size(), 2u);
  EXPECT_EQ(net.plans[0].centerline.back(), net.plans[1].centerline.front());
  int at_junction = 0;
  for (const auto& v : net.joint_mesh.vertices) at_junction += v.head<2>().isApprox(net.plans[0].centerline.back());
  EXPECT_EQ(at_junction, 1);
}

TEST(Roads, WidthMismatchRejected) {
  std::vector<OsmRoad> roads(1);
  roads[0].centerline = {{0, 0}, {1, 0}};
  EXPECT_THROW(build_road_network(roads, std::vector<double>{}), Error);
}

TEST(Roads, OffsetPolyline) {
  const std::vector<Vec2> line = {{0, 0}, {10, 0}};
  const auto left = offset_polyline(line, 2.0);
  ASSERT_EQ(left.size(), 2u);
  EXPECT_TRUE(left[0].isApprox(Vec2(0, 2)));
  EXPECT_TRUE(offset_polyline(std::vector<Vec2>{{1, 1}}, 1.0).empty());
}

TEST(RoadWidth, UniformLateralPercentile) {
  Rng rng(21);
  LidarSweep s;
  for (int i = 0; i < 20000; ++i) {
    s.points.push_back({static_cast<float>(rng.uniform(0, 100)), static_cast<float>(rng.uniform(-3.5, 3.5)), 0.0f,
                        static_cast<std::int8_t>(Class20::Road)});
  }
  const std::vector<Vec2> line = {{0, 0}, {100, 0}};
  EXPECT_NEAR(fit_road_width(line, "residential", s), 6.3, 0.2);
}

TEST(RoadWidth, UnlabeledGroundBand) {
  Rng rng(22);
  LidarSweep s;
  for (int i = 0; i < 20000; ++i) {
    s.points.push_back({static_cast<float>(rng.uniform(0, 100)), static_cast<float>(rng.uniform(-4, 4)),
                        static_cast<float>(rng.uniform(-0.1, 0.1)), -1});
    // elevated clutter outside the band is ignored
    s.points.push_back({static_cast<float>(rng.uniform(0, 100)), static_cast<float>(rng.uniform(-14, 14)), 3.0f, -1});
  }
  const std::vector<Vec2> line = {{0, 0}, {100, 0}};
  EXPECT_NEAR(fit_road_width(line, "residential", s), 7.2, 0.2);
}

TEST(RoadWidth, Fallbacks) {
  const std::vector<Vec2> line = {{0, 0}, {100, 0}};
  LidarSweep few;
  for (int i = 0; i < 10; ++i) few.points.push_back({static_cast<float>(i), 1.0f, 0.0f, static_cast<std::int8_t>(Class20::Road)});
  EXPECT_DOUBLE_EQ(fit_road_width(line, "residential", few), 6.0);
  EXPECT_DOUBLE_EQ(fit_road_width(line, "residential", LidarSweep{}), 6.0);
  EXPECT_DOUBLE_EQ(fit_road_width(line, "residential", LidarSweep{}, {}, 9.0), 9.0);
  EXPECT_DOUBLE_EQ(default_road_width("residential"), 6.0);
}

}  // namespace
}  // namespace trove
