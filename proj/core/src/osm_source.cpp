#include "trove/osm_source.hpp"

#include <algorithm>
#include <cstdio>

#include "trove/error.hpp"

#ifdef TROVE_HAVE_CURL
#include <curl/curl.h>
#endif

namespace trove {

GeoBBox scene_bbox(const SceneRecord& record, double margin) {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  auto grow = [&](const Vec3& p) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  };
  for (const auto& e : record.ego_poses) grow(e.scene_from_ego.translation);
  for (const auto& o : record.objects) grow(o.center);
  if (!std::isfinite(lo.x())) lo = hi = Vec2::Zero();
  lo -= Vec2::Constant(margin);
  hi += Vec2::Constant(margin);
  const auto [lat0, lon0] = local_to_geo(record.origin, lo);
  const auto [lat1, lon1] = local_to_geo(record.origin, hi);
  return {std::min(lat0, lat1), std::min(lon0, lon1), std::max(lat0, lat1), std::max(lon0, lon1)};
}

std::string osm_cache_name(const GeoBBox& b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "osm_%.6f_%.6f_%.6f_%.6f.osm", b.min_lat, b.min_lon, b.max_lat, b.max_lon);
  return buf;
}

bool osm_fetch_supported() {
#ifdef TROVE_HAVE_CURL
  return true;
#else
  return false;
#endif
}

namespace {

#ifdef TROVE_HAVE_CURL
std::size_t append_body(char* data, std::size_t size, std::size_t n, void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

std::string fetch(const std::string& endpoint, const GeoBBox& b) {
  char query[160];
  std::snprintf(query, sizeof query, "?bbox=%.6f,%.6f,%.6f,%.6f", b.min_lon, b.min_lat, b.max_lon, b.max_lat);
  CURL* curl = curl_easy_init();
  if (!curl) throw Error(Errc::OsmUnavailable, "cannot initialize the HTTP client");
  std::string body;
  const std::string url = endpoint + query;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, 120L);
  curl_easy_setopt(curl, CURLOPT_USERAGENT, "trove/0.1");
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) throw Error(Errc::OsmUnavailable, "fetch of " + url + " failed: " + curl_easy_strerror(rc));
  return body;
}
#endif

}  // namespace

OsmText resolve_osm(const SceneRecord& record, const OsmSourceConfig& cfg) {
  if (cfg.file) {
    if (!std::filesystem::exists(*cfg.file)) {
      throw Error(Errc::OsmUnavailable, "configured OSM file '" + cfg.file->string() + "' does not exist");
    }
    return {read_text_file(*cfg.file), cfg.file->string()};
  }
  if (record.osm_file) {
    const auto path = record.directory / *record.osm_file;
    if (!std::filesystem::exists(path)) {
      throw Error(Errc::OsmUnavailable, "scene OSM file '" + path.string() + "' does not exist");
    }
    return {read_text_file(path), path.string()};
  }
  const GeoBBox box = scene_bbox(record, cfg.margin);
  const auto cached = cfg.cache_dir / osm_cache_name(box);
  if (!cfg.cache_dir.empty() && std::filesystem::exists(cached)) return {read_text_file(cached), cached.string()};
  if (!cfg.fetch) {
    throw Error(Errc::OsmUnavailable, "no OSM extract for scene '" + record.scene_id + "' (cache miss on " +
                                          cached.string() + ", fetching disabled)");
  }
#ifdef TROVE_HAVE_CURL
  std::string xml = fetch(cfg.endpoint, box);
  if (!cfg.cache_dir.empty()) write_text_file(cached, xml);
  return {std::move(xml), cfg.endpoint};
#else
  throw Error(Errc::OsmUnavailable, "fetching requested but this build has no HTTP client");
#endif
}

}  // namespace trove
