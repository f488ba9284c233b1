#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trove/annotate.hpp"
#include "trove/background.hpp"
#include "trove/layout.hpp"
#include "trove/osm_source.hpp"
#include "trove/placement.hpp"
#include "trove/post.hpp"
#include "trove/scene.hpp"

namespace trove {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct PipelineConfig {
  // inputs and outputs as written; see resolve()
  std::filesystem::path base_dir;
  std::filesystem::path dataset_root;
  std::vector<std::string> scenes;  // empty = every scene directory under dataset_root
  std::filesystem::path catalog;
  std::filesystem::path output;
  std::optional<std::filesystem::path> remap13;          // taxonomy override
  std::optional<std::filesystem::path> category_compat;  // asset category table

  std::uint64_t seed = 0;
  int cameras_per_scene = 20;
  int width = 1600;
  int height = 900;
  int jobs = 1;           // scenes in flight
  int render_threads = 1; // images in flight per scene

  OsmSourceConfig osm;  // paths unresolved
  bool osm_strict_node_refs = false;

  LayoutConfig layout;
  RoadNetworkConfig roads;
  RoadWidthConfig road_width;
  bool sidewalks_on_untagged_roads = true;
  AssembleConfig assemble;

  int top_k = 1;
  CameraSamplingConfig cameras;

  GridConfig grid;
  double mask_margin = 0.75;
  VegetationConfig vegetation;
  RoadsideConfig roadside;

  double near = 0.1;
  double far = 1000.0;
  std::size_t min_box_pixels = 25;
  bool flow = true;

  CurationConfig curation;

  // `p` against base_dir when relative.
  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.empty() || p.is_absolute() ? p : base_dir / p;
  }
};

// Parses the JSON config. Unknown keys, wrong types, out-of-range values and
// a missing seed throw Error(ConfigError). Relative paths are resolved
// against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view json, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& file);
// Canonical JSON of the config with every default filled in.
std::string canonical_config(const PipelineConfig& cfg);
// FNV-1a over the canonical JSON without the parallelism settings (jobs,
// render_threads), which do not change any output; hex.
std::string config_hash(const PipelineConfig& cfg);

struct SceneTimings {
  double scene_build_seconds = 0.0;
  std::vector<double> annotate_seconds;  // per image
};

struct SceneResult {
  std::string scene_id;
  std::filesystem::path directory;
  std::vector<std::string> files;  // relative to directory, sorted
  std::size_t images = 0;
  std::size_t kept = 0;
  ClassHistogram kept_histogram{};
  std::size_t instances = 0;
  std::size_t warnings = 0;
  SceneTimings timings;
};

struct RunManifest {
  std::string tool_version = std::string(kToolVersion);
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<SceneResult> scenes;
};

std::string manifest_json(const RunManifest& manifest);
RunManifest parse_manifest(std::string_view json);

// Everything built for one scene before annotation.
struct BuiltScene {
  SceneRecord record;
  ScenePlans plans;
  DensityGrid density;
  SceneGraph graph;
  Warnings warnings;
};

// Ingest through assembly for one scene.
BuiltScene build_scene(const PipelineConfig& cfg, const std::string& scene_id, const AssetCatalog& catalog,
                       const ClassTaxonomy& taxonomy);

// Writes scene_graph.json, scene.gltf and the density map into `dir`.
std::vector<std::string> write_scene_files(const BuiltScene& built, const AssetCatalog& catalog,
                                           const std::filesystem::path& dir);

struct AnnotateResult {
  std::vector<std::string> files;
  CurationReport curation;
  std::vector<double> seconds;
};

// Rasterizes every camera of `scene` into <dir>/frames/NNN/ and writes the
// curation report.
AnnotateResult annotate_scene(const SceneGraph& scene, const AssetCatalog& catalog, const ClassTaxonomy& taxonomy,
                              const PipelineConfig& cfg, const std::filesystem::path& dir);

// Runs every configured scene. Outputs are staged under
// <output>/_incomplete/<scene> and moved into place when the scene
// completes; <output>/manifest.json is written last and only when every
// scene succeeded. Scene failures are rethrown with the scene id.
RunManifest run_pipeline(const PipelineConfig& cfg);

// Scene ids under the dataset root (directories holding scene.json), sorted.
std::vector<std::string> discover_scenes(const std::filesystem::path& dataset_root);

// Scene, image and class statistics over one or more manifests.
std::string stats_report(const std::vector<RunManifest>& manifests, bool csv = false,
                         const ClassTaxonomy& taxonomy = ClassTaxonomy::standard());

// Nearest-rank percentile of `values` (q in [0, 1]); 0 for an empty list.
double percentile(std::vector<double> values, double q);

}  // namespace trove
