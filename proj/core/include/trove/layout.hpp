#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trove/geo.hpp"
#include "trove/ingest.hpp"
#include "trove/mesh.hpp"

namespace trove {

struct LayoutConfig {
  int histogram_bins = 36;     // over [0, pi)
  double perp_tol_bins = 1.5;  // allowed deviation of a pair from pi/2, in bins
  double dominance = 0.6;      // fraction of the perimeter the best pair must carry
  bool use_area_ratio = false;
  double rect_ratio = 0.85;    // polygon area / hull area, when use_area_ratio
  double meters_per_level = 3.0;
  double default_height = 10.0;
};

// Edge lengths binned by undirected edge orientation.
struct OrientationHistogram {
  std::vector<double> weights;

  int bins() const { return static_cast<int>(weights.size()); }
  double bin_width() const { return kPi / bins(); }
  int bin_of(double orientation) const;
  double total() const;
};

// Throws Error(DegenerateInput) when bins < 8.
OrientationHistogram orientation_histogram(const Polygon2& footprint, int bins);

struct RectReplace {
  Vec2 center = Vec2::Zero();
  double yaw = 0.0;               // [0, pi)
  Vec2 extents = Vec2::Ones();    // full size along (yaw, yaw + pi/2)
};
struct FacadeTexture {};

using BuildingClass = std::variant<RectReplace, FacadeTexture>;

BuildingClass classify_building(const Polygon2& footprint, const LayoutConfig& cfg = {});

struct BuildingPlan {
  std::int64_t source_id = 0;
  Polygon2 footprint;
  BuildingClass classification;
  double height = 10.0;

  bool rect_replace() const { return std::holds_alternative<RectReplace>(classification); }
};

// "height" tag, else levels * meters_per_level, else default_height.
double building_height(const OsmBuilding& b, const LayoutConfig& cfg = {});
BuildingPlan plan_building(const OsmBuilding& b, const LayoutConfig& cfg = {});

// Closed prism over the footprint with outward winding.
TriangleMesh extrude_building(const BuildingPlan& plan);

struct RoadPlan {
  std::int64_t source_id = 0;
  std::string highway_class;
  std::vector<Vec2> centerline;
  double width = 6.0;
  TriangleMesh mesh;
};

struct RoadNetworkConfig {
  double weld_distance = 0.5;  // endpoints closer than this across ways are merged
  double surface_z = 0.0;
  double miter_limit = 4.0;    // max miter length in half-widths
};

struct RoadNetwork {
  std::vector<RoadPlan> plans;
  TriangleMesh joint_mesh;  // all ribbons plus junction fans, coincident vertices welded
};

RoadNetwork build_road_network(std::span<const OsmRoad> roads, std::span<const double> widths,
                               const RoadNetworkConfig& cfg = {});

// Mitered ribbon along a polyline; empty when the line has < 2 distinct points.
TriangleMesh ribbon_mesh(std::span<const Vec2> line, double width, double z, double miter_limit = 4.0);

struct RoadWidthConfig {
  double corridor_half_width = 15.0;  // points farther from the centerline are ignored
  double percentile = 0.9;
  std::size_t min_points = 50;
  double min_width = 3.0;
  double max_width = 30.0;
  double ground_band = 0.3;  // |z| bound for unlabeled ground points
};

double default_road_width(std::string_view highway_class);

// 2 x the percentile of |lateral offset| of road points beside the
// centerline, clamped; `fallback` (or the class default) when too few
// qualify.
double fit_road_width(std::span<const Vec2> centerline, std::string_view highway_class,
                      const LidarSweep& sweep, const RoadWidthConfig& cfg = {},
                      std::optional<double> fallback = std::nullopt);

// Offset copy of a polyline (left for positive distance).
std::vector<Vec2> offset_polyline(std::span<const Vec2> line, double distance);

}  // namespace trove
