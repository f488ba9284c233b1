#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trove/ingest.hpp"

namespace trove {

struct AssetMatch {
  std::string object_id;
  std::string asset_id;
  double scale = 1.0;
  double score = 0.0;  // quality-of-fit, meters
  int rank = 1;        // 1 = best score

  bool operator==(const AssetMatch&) const = default;
};

// Uniform factor making the asset's largest dimension equal the query's.
double fit_scale(const Vec3& query_dims, const Vec3& asset_dims);

// Quality of fit of an asset placed co-centered and co-oriented with the
// query box after fit_scale: footprint IoU times the smaller height.
double iou3d(const ObjectBox& query, const Vec3& asset_dims);

// Which asset categories may fill a box of each taxonomy class.
class CategoryCompat {
 public:
  // Every class accepts its own category; cars also accept jeeps.
  static CategoryCompat defaults();
  // "<class>: <category>[, <category>...]" lines; '#' starts a comment.
  // Classes not listed keep the default.
  static CategoryCompat parse(std::string_view text);

  const std::vector<std::string>& categories(Class20 c) const;
  std::string to_text() const;

 private:
  std::map<Class20, std::vector<std::string>> table_;
};

// Best asset per object (k = 1) or a uniform seeded draw among the top k.
// Streams are keyed by object id so results do not depend on list order.
// Throws NoAssetForCategory.
std::vector<AssetMatch> match_assets(std::span<const ObjectBox> objects, const AssetCatalog& catalog, int k,
                                     std::uint64_t seed, const CategoryCompat& compat = CategoryCompat::defaults());

AssetMatch match_asset(const ObjectBox& object, const AssetCatalog& catalog, int k, std::uint64_t seed,
                       const CategoryCompat& compat = CategoryCompat::defaults());

struct EgoClone {
  std::int64_t timestamp = 0;
  bool operator==(const EgoClone&) const = default;
};
struct VehicleMount {
  std::string object_id;
  bool operator==(const VehicleMount&) const = default;
};
using CameraSource = std::variant<EgoClone, VehicleMount>;

struct CameraSample {
  RigidTransform camera_from_scene;
  CameraRig rig;
  CameraSource source;

  Vec3 position() const { return camera_from_scene.inverse().translation; }
  bool operator==(const CameraSample&) const = default;
};

struct CameraSamplingConfig {
  double min_mount_height = 1.2;  // vehicle-mounted cameras
  double min_camera_z = 0.2;
};

// First sample clones the ego camera; the rest are mounted on distinct
// vehicles, then further ego-trajectory poses when vehicles run out.
// Throws NoCameraRig, EmptyScene, CameraBelowGround.
std::vector<CameraSample> sample_cameras(const SceneRecord& scene, int n, std::uint64_t seed,
                                         const CameraSamplingConfig& cfg = {});

// Pose of a camera carried by `vehicle` with the ego rig's mount.
RigidTransform vehicle_mount_pose(const ObjectBox& vehicle, const CameraRig& rig,
                                  const CameraSamplingConfig& cfg = {});

}  // namespace trove
