#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trove/ingest.hpp"
#include "trove/layout.hpp"

namespace trove {

// Scalar grid over the ground plane; row-major, row 0 at origin.y.
struct DensityGrid {
  Vec2 origin = Vec2::Zero();  // lower-left corner
  double cell = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> values;
  bool all_zero = false;  // flagged when nothing qualified

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * nx + ix]; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }
  Vec2 cell_center(int ix, int iy) const {
    return origin + Vec2((ix + 0.5) * cell, (iy + 0.5) * cell);
  }
  double sum() const;
  double max() const;
};

struct GridConfig {
  double cell = 1.0;
  // Explicit bounds (min, max); derived from the sweep extent when absent.
  std::optional<std::pair<Vec2, Vec2>> bounds;
  double min_height = 0.5;   // height band for unlabeled points
  double max_height = 15.0;
};

// Vegetation-labeled point counts per cell (or unlabeled points within the
// height band), max-normalized to 1.
DensityGrid vegetation_density(const LidarSweep& sweep, const GridConfig& cfg = {});

// Zeroes cells whose center lies within `margin` of any road ribbon.
DensityGrid mask_roads(const DensityGrid& grid, std::span<const RoadPlan> roads, double margin);

// Closed-region test against the ribbons of `roads`.
bool inside_any_road(const Vec2& p, std::span<const RoadPlan> roads, double margin = 0.0);

enum class BackgroundKind { Tree, Bush, Sign, Pole };
std::string_view to_string(BackgroundKind k);

struct BackgroundInstance {
  BackgroundKind kind = BackgroundKind::Tree;
  std::string asset_id;
  Vec3 position = Vec3::Zero();  // on the ground plane
  double yaw = 0.0;
  double scale = 1.0;

  bool operator==(const BackgroundInstance&) const = default;
};

struct VegetationConfig {
  double min_scale = 0.8;
  double max_scale = 1.2;
  double density_coeff = 0.05;  // instances per unit of normalized density
};

// Instance count for a grid: round(density_coeff * sum).
std::size_t vegetation_count(const DensityGrid& grid, const VegetationConfig& cfg = {});

// Throws EmptyDensity (sum 0 with count > 0) and NoAssetForCategory.
std::vector<BackgroundInstance> sample_vegetation(const DensityGrid& grid, std::size_t count,
                                                  const AssetCatalog& catalog, std::uint64_t seed,
                                                  const VegetationConfig& cfg = {});

// Which side of a sidewalk line the carriageway lies on.
enum class RoadSide { Left, Right, Unknown };

struct SidewalkLine {
  std::vector<Vec2> points;
  RoadSide road_side = RoadSide::Unknown;
};

struct RoadsideConfig {
  double spacing = 20.0;  // mean gap, meters
  double offset = 0.5;    // toward the non-road side
  double min_scale = 0.9;
  double max_scale = 1.1;
};

std::vector<BackgroundInstance> place_roadside(std::span<const SidewalkLine> sidewalks, const AssetCatalog& catalog,
                                               const RoadsideConfig& cfg, std::uint64_t seed);

// 8-bit grayscale PNG (row 0 = north edge) plus "key value" sidecar text.
std::vector<std::uint8_t> density_png(const DensityGrid& grid);
std::string density_sidecar(const DensityGrid& grid);

}  // namespace trove
