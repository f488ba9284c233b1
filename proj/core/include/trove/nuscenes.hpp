#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "trove/ingest.hpp"

namespace trove {

// Reference importer from the nuScenes table layout into the TRoVE-IN
// scene schema.
struct NuScenesOptions {
  std::string version = "v1.0-mini";
  std::size_t keyframe = 0;  // keyframe whose annotations become the objects
  bool convert_lidar = true;
  std::optional<std::string> osm_file;  // copied into the record verbatim
};

// nuScenes category name -> 20-class label; nullopt for skipped categories.
std::optional<Class20> map_nuscenes_category(std::string_view category);

// Geographic origin of a nuScenes map location, when known.
std::optional<GeoOrigin> nuscenes_map_origin(std::string_view location);

// Reads <dataroot>/<version>/*.json, writes <out_root>/<scene_name>/scene.json
// and its LiDAR sweeps, and returns the record. The scene frame is the
// nuScenes global frame shifted so that the first ego pose is at the origin.
// Throws MissingFile, SchemaViolation.
SceneRecord convert_nuscenes_scene(const std::filesystem::path& dataroot, const std::string& scene_name,
                                   const std::filesystem::path& out_root, const NuScenesOptions& options = {});

}  // namespace trove
