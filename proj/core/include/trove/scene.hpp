#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trove/background.hpp"
#include "trove/ingest.hpp"
#include "trove/layout.hpp"
#include "trove/mesh.hpp"
#include "trove/placement.hpp"

namespace trove {

inline constexpr std::string_view kSceneSchema = "trove-scene/1";

// A catalog asset placed in the scene. The asset mesh is modeled centered at
// its origin with x along its length, so `pose` maps asset coordinates
// (after uniform scaling) into the scene frame.
struct SceneInstance {
  std::uint32_t id = 0;  // dense from 1
  std::string asset_id;
  Class20 cls = Class20::Void;
  RigidTransform pose;
  double scale = 1.0;
  Vec3 size = Vec3::Ones();  // scaled asset extents
  std::string source;        // object id, "building/<osm id>", "vegetation/<n>" or "roadside/<n>"

  bool operator==(const SceneInstance&) const = default;
};

// Static surface geometry in scene coordinates (roads, sidewalks, ground,
// extruded buildings). Surfaces carry instance id 0 in the rasters.
struct SceneMesh {
  std::string name;
  Class20 cls = Class20::Void;
  SurfaceRole role = SurfaceRole::Terrain;
  TriangleMesh mesh;

  bool operator==(const SceneMesh&) const = default;
};

struct SceneMeta {
  std::string schema = std::string(kSceneSchema);
  std::uint64_t seed = 0;
  GeoOrigin origin;
  std::string scene_id;

  bool operator==(const SceneMeta&) const = default;
};

struct SceneGraph {
  SceneMeta meta;
  std::vector<SceneInstance> instances;
  std::vector<SceneMesh> meshes;
  std::vector<CameraSample> cameras;
  std::string hdri_id;
  std::map<std::string, std::string> materials;  // surface role -> material id

  const SceneInstance* find(std::uint32_t id) const;
  bool operator==(const SceneGraph&) const = default;
};

struct ScenePlans {
  std::vector<BuildingPlan> buildings;
  RoadNetwork roads;
  std::vector<SidewalkLine> sidewalks;
};

struct AssembleConfig {
  double sidewalk_width = 2.0;
  double sidewalk_z = 0.15;  // curb height
  double ground_z = -0.02;   // just under the road surface
  double ground_margin = 300.0;  // ground plane extends this far beyond the content
};

// Instance ids: annotated objects in record order (timestamp, id), then
// rectangular buildings replaced by catalog assets, then `background` in
// sample order. HDRI and materials are seeded draws from the catalog.
// Throws DanglingAssetRef, CameraBelowGround.
SceneGraph assemble(const SceneRecord& record, const ScenePlans& plans, std::span<const AssetMatch> matches,
                    std::span<const CameraSample> cameras, std::span<const BackgroundInstance> background,
                    const AssetCatalog& catalog, std::uint64_t seed, const AssembleConfig& cfg = {});

// Rounds every floating-point field to 9 significant digits and fixes the
// quaternion sign (w >= 0), so that serialization round-trips exactly.
void canonicalize(SceneGraph& scene);
double quantize9(double v);

// Canonical JSON: sorted keys, floats at 9 significant digits.
std::string serialize_scene(const SceneGraph& scene);
// Throws SchemaVersionMismatch, CorruptStream.
SceneGraph deserialize_scene(std::string_view bytes);

// Asset meshes referenced by the scene's instances, keyed by asset id.
// Throws DanglingAssetRef, MeshLoadFailure.
std::map<std::string, TriangleMesh> load_instance_meshes(const SceneGraph& scene, const AssetCatalog& catalog);

// glTF 2.0 (.gltf, buffers embedded as base64). Node names are
// "inst_<id>_<class>"; a root node turns the z-up scene into glTF's y-up
// frame. Throws MeshLoadFailure.
std::string export_interchange(const SceneGraph& scene, const AssetCatalog& catalog);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace trove
