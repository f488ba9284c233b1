#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "trove/ingest.hpp"

namespace trove::fixture {

// Synthetic TRoVE-IN dataset: one scene with 3 buildings, 2 roads, 4
// vehicles, 2 pedestrians, a labeled LiDAR cloud, an OSM extract, an asset
// catalog with box meshes and a pipeline config.
struct Options {
  std::uint64_t seed = 7;           // LiDAR sampling only
  std::size_t lidar_points = 10000;
  int ego_poses = 16;
  std::uint64_t pipeline_seed = 42;  // written into the config
  int cameras_per_scene = 20;
  int width = 1600;
  int height = 900;
};

inline constexpr std::string_view kSceneId = "fixture-0001";

struct Paths {
  std::filesystem::path root;
  std::filesystem::path dataset_root;  // root/dataset
  std::filesystem::path scene_dir;     // root/dataset/<kSceneId>
  std::filesystem::path catalog;       // root/catalog/catalog.json
  std::filesystem::path config;        // root/config.json
  std::filesystem::path output;        // root/out
};

Paths write_fixture(const std::filesystem::path& root, const Options& options = {});

// The scene record (with sweeps) that write_fixture stores.
SceneRecord fixture_record(const Options& options = {});
// OSM XML for the fixture map.
std::string fixture_osm(const GeoOrigin& origin);
// Catalog entries; mesh_ref paths are relative to the catalog directory.
AssetCatalog fixture_catalog();

}  // namespace trove::fixture
