#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "trove/ingest.hpp"

namespace trove {

struct GeoBBox {
  double min_lat = 0, min_lon = 0, max_lat = 0, max_lon = 0;
};

struct OsmSourceConfig {
  std::optional<std::filesystem::path> file;  // used for every scene when set
  std::filesystem::path cache_dir;            // bbox-keyed extracts
  bool fetch = false;                         // network access, off by default
  std::string endpoint = "https://api.openstreetmap.org/api/0.6/map";
  double margin = 100.0;  // meters added around the scene extent
};

// Extent of the ego trajectory and annotated objects plus `margin`.
GeoBBox scene_bbox(const SceneRecord& record, double margin);

// Cache file name for a bounding box ("osm_<lat>_<lon>_<lat>_<lon>.osm",
// 6 decimals).
std::string osm_cache_name(const GeoBBox& box);

struct OsmText {
  std::string xml;
  std::string origin;  // where the extract came from
};

// Resolution order: configured file, the record's own extract, the cache,
// then a fetch (stored into the cache). Throws OsmUnavailable.
OsmText resolve_osm(const SceneRecord& record, const OsmSourceConfig& cfg);

// True when the library was built with network fetching.
bool osm_fetch_supported();

}  // namespace trove
