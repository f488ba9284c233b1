#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trove/error.hpp"
#include "trove/geo.hpp"
#include "trove/taxonomy.hpp"

namespace trove {

// Mean Earth radius (IUGG), meters.
inline constexpr double kEarthRadius = 6371008.8;

struct GeoOrigin {
  double lat = 0.0;  // degrees WGS84
  double lon = 0.0;  // degrees WGS84
  double alt = 0.0;  // meters

  bool operator==(const GeoOrigin&) const = default;
};

// Local equirectangular projection about `origin`: x east, y north, meters.
Vec2 geo_to_local(const GeoOrigin& origin, double lat, double lon);
// Inverse of geo_to_local; returns {lat, lon}.
std::pair<double, double> local_to_geo(const GeoOrigin& origin, const Vec2& xy);

struct ObjectBox {
  std::string id;
  Class20 category = Class20::Void;
  Vec3 center = Vec3::Zero();  // scene frame, box center
  Vec3 size = Vec3::Ones();    // length (along heading), width, height
  double yaw = 0.0;            // about +z, [-pi, pi)
  std::int64_t timestamp = 0;  // microseconds

  bool operator==(const ObjectBox&) const = default;
};

struct CameraIntrinsics {
  double fx = 1, fy = 1, cx = 0, cy = 0;

  Mat3 matrix() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

// Rectified pinhole camera. Camera frame: x right, y down, z forward.
struct CameraRig {
  std::string name;
  CameraIntrinsics intrinsics;
  RigidTransform camera_from_ego;  // maps ego-frame points into the camera frame
  int width = 0;
  int height = 0;

  // Same camera at another resolution with intrinsics scaled per axis.
  CameraRig resized(int new_width, int new_height) const;
  bool operator==(const CameraRig&) const = default;
};

struct EgoPose {
  std::int64_t timestamp = 0;
  RigidTransform scene_from_ego;
};

struct LidarPoint {
  float x = 0, y = 0, z = 0;
  std::int8_t label = -1;  // Class20 id, -1 when unlabeled

  bool operator==(const LidarPoint&) const = default;
};

struct LidarSweep {
  std::vector<LidarPoint> points;
  std::int64_t timestamp = 0;

  bool labeled() const;
  bool operator==(const LidarSweep&) const = default;
};

struct SweepRef {
  std::string path;  // relative to the scene directory
  std::int64_t timestamp = 0;
};

struct SceneRecord {
  std::string scene_id;
  GeoOrigin origin;
  std::vector<EgoPose> ego_poses;     // sorted by timestamp
  std::vector<CameraRig> cameras;
  std::vector<ObjectBox> objects;     // sorted by (timestamp, id)
  std::vector<SweepRef> sweep_refs;
  std::vector<LidarSweep> sweeps;     // loaded sweeps, parallel to sweep_refs
  std::optional<std::string> osm_file;  // relative to the scene directory
  std::filesystem::path directory;
  Warnings warnings;
};

// Reads <dataset_root>/<scene_id>/scene.json ("trove-in/1") and its LiDAR
// sweeps. Throws MissingFile, SchemaViolation, EmptyScene.
SceneRecord parse_scene_record(const std::filesystem::path& dataset_root, const std::string& scene_id);

// Parses the scene JSON text alone; sweeps are loaded from `scene_dir` when
// load_sweeps is set.
SceneRecord parse_scene_json(std::string_view json, const std::filesystem::path& scene_dir,
                             bool load_sweeps);
std::string serialize_scene_record(const SceneRecord& record);

// Yaw about +z of a (w, x, y, z) quaternion; roll and pitch are discarded.
double quaternion_to_yaw(double w, double x, double y, double z);

// ---------------------------------------------------------------------------
// OSM

enum class SidewalkTag { Unknown, None, Left, Right, Both };

struct OsmBuilding {
  std::int64_t id = 0;
  Polygon2 footprint;
  std::optional<int> levels;
  std::optional<double> height;  // explicit "height" tag, meters
};

struct OsmRoad {
  std::int64_t id = 0;
  std::vector<Vec2> centerline;
  std::string highway_class;
  std::optional<double> tagged_width;
  SidewalkTag sidewalk = SidewalkTag::Unknown;
};

struct OsmExtract {
  std::vector<OsmBuilding> buildings;
  std::vector<OsmRoad> roads;
  std::vector<std::vector<Vec2>> sidewalks;
  Warnings warnings;
};

struct OsmParseOptions {
  // Ways referencing absent nodes throw UnresolvedNodeRef when set; otherwise
  // they are skipped with a warning.
  bool strict_node_refs = true;
};

// Throws XmlMalformed, UnresolvedNodeRef.
OsmExtract parse_osm(std::string_view xml, const GeoOrigin& origin, const OsmParseOptions& options = {});

// ---------------------------------------------------------------------------
// LiDAR: "TRVLID01" followed by little-endian float32 (x, y, z, label) records.

inline constexpr std::string_view kLidarMagic = "TRVLID01";

struct LidarParseResult {
  LidarSweep sweep;
  Warnings warnings;
};

// Throws TruncatedRecord, NonFinitePoint, MissingFile.
LidarParseResult parse_lidar(const std::filesystem::path& file);
LidarParseResult parse_lidar_bytes(std::span<const std::byte> bytes);
std::vector<std::byte> serialize_lidar(const LidarSweep& sweep);

// ---------------------------------------------------------------------------
// Asset catalog ("trove-catalog/1")

enum class SurfaceRole { Facade, Road, Sidewalk, Terrain };
inline constexpr std::array<SurfaceRole, 4> kSurfaceRoles = {SurfaceRole::Facade, SurfaceRole::Road,
                                                             SurfaceRole::Sidewalk, SurfaceRole::Terrain};
std::string_view to_string(SurfaceRole role);

// Catalog category for roadside poles; rendered as the traffic-sign class.
inline constexpr std::string_view kPoleCategory = "pole";

struct Asset {
  std::string asset_id;
  std::string category;  // 20-class name, or "pole"
  Vec3 bbox_dims = Vec3::Ones();
  std::string mesh_ref;  // relative to the catalog file

  Class20 render_class() const;
};

struct Material {
  std::string material_id;
  SurfaceRole role = SurfaceRole::Facade;
};

struct AssetCatalog {
  std::vector<Asset> assets;
  std::vector<Material> materials;
  std::vector<std::string> hdris;
  std::filesystem::path base_dir;

  const Asset* find(std::string_view asset_id) const;
  std::vector<const Asset*> by_category(std::string_view category) const;
  std::filesystem::path mesh_path(const Asset& a) const { return base_dir / a.mesh_ref; }
};

// Throws SchemaViolation, MissingFile.
AssetCatalog parse_catalog(std::string_view json, const std::filesystem::path& base_dir);
AssetCatalog load_catalog(const std::filesystem::path& file);
std::string serialize_catalog(const AssetCatalog& catalog);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace trove
