#include "trove/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "trove/error.hpp"
#include "trove/raster_io.hpp"
#include "trove/rng.hpp"

namespace trove {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config

namespace {

json path_or_null(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->generic_string()) : json(nullptr);
}

json config_json(const PipelineConfig& c) {
  json scenes = c.scenes;
  return json{
      {"dataset_root", c.dataset_root.generic_string()},
      {"scenes", scenes},
      {"catalog", c.catalog.generic_string()},
      {"output", c.output.generic_string()},
      {"remap13", path_or_null(c.remap13)},
      {"category_compat", path_or_null(c.category_compat)},
      {"seed", c.seed},
      {"cameras_per_scene", c.cameras_per_scene},
      {"resolution", {c.width, c.height}},
      {"jobs", c.jobs},
      {"render_threads", c.render_threads},
      {"osm",
       {{"file", path_or_null(c.osm.file)},
        {"cache_dir", c.osm.cache_dir.generic_string()},
        {"fetch", c.osm.fetch},
        {"endpoint", c.osm.endpoint},
        {"margin", c.osm.margin},
        {"strict_node_refs", c.osm_strict_node_refs}}},
      {"layout",
       {{"histogram_bins", c.layout.histogram_bins},
        {"perp_tol_bins", c.layout.perp_tol_bins},
        {"dominance", c.layout.dominance},
        {"use_area_ratio", c.layout.use_area_ratio},
        {"rect_ratio", c.layout.rect_ratio},
        {"meters_per_level", c.layout.meters_per_level},
        {"default_height", c.layout.default_height}}},
      {"roads",
       {{"weld_distance", c.roads.weld_distance},
        {"miter_limit", c.roads.miter_limit},
        {"corridor_half_width", c.road_width.corridor_half_width},
        {"percentile", c.road_width.percentile},
        {"min_points", c.road_width.min_points},
        {"min_width", c.road_width.min_width},
        {"max_width", c.road_width.max_width},
        {"ground_band", c.road_width.ground_band},
        {"sidewalk_width", c.assemble.sidewalk_width},
        {"sidewalks_on_untagged", c.sidewalks_on_untagged_roads}}},
      {"placement",
       {{"top_k", c.top_k},
        {"min_mount_height", c.cameras.min_mount_height},
        {"min_camera_z", c.cameras.min_camera_z}}},
      {"background",
       {{"cell", c.grid.cell},
        {"min_height", c.grid.min_height},
        {"max_height", c.grid.max_height},
        {"mask_margin", c.mask_margin},
        {"density_coeff", c.vegetation.density_coeff},
        {"min_scale", c.vegetation.min_scale},
        {"max_scale", c.vegetation.max_scale},
        {"roadside_spacing", c.roadside.spacing},
        {"roadside_offset", c.roadside.offset},
        {"roadside_min_scale", c.roadside.min_scale},
        {"roadside_max_scale", c.roadside.max_scale}}},
      {"annotate",
       {{"near", c.near}, {"far", c.far}, {"min_box_pixels", c.min_box_pixels}, {"flow", c.flow}}},
      {"curation",
       {{"pixel_floor", c.curation.pixel_floor},
        {"min_classes", c.curation.min_classes},
        {"count_void", c.curation.count_void}}},
  };
}

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::ConfigError, what); }

bool same_kind(const json& def, const json& v) {
  if (def.is_null()) return v.is_null() || v.is_string();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

// Overlays `user` onto the defaults, rejecting unknown keys and type changes.
void overlay(json& target, const json& user, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) config_error("unknown key '" + key + "'");
    json& slot = target[it.key()];
    if (!same_kind(slot, it.value())) config_error("key '" + key + "' has the wrong type");
    if (slot.is_object()) {
      overlay(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

void check(bool ok, const std::string& what) {
  if (!ok) config_error(what);
}

std::optional<std::filesystem::path> opt_path(const json& j) {
  if (j.is_null()) return std::nullopt;
  return std::filesystem::path(j.get<std::string>());
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) config_error("config must be a JSON object");
  if (!user.contains("seed")) config_error("'seed' is required");
  if (!user["seed"].is_number_unsigned()) config_error("'seed' must be a non-negative integer");

  json m = config_json(PipelineConfig{});
  overlay(m, user, "");

  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    c.dataset_root = m["dataset_root"].get<std::string>();
    c.scenes = m["scenes"].get<std::vector<std::string>>();
    c.catalog = m["catalog"].get<std::string>();
    c.output = m["output"].get<std::string>();
    c.remap13 = opt_path(m["remap13"]);
    c.category_compat = opt_path(m["category_compat"]);
    c.seed = m["seed"].get<std::uint64_t>();
    c.cameras_per_scene = m["cameras_per_scene"].get<int>();
    const auto res = m["resolution"].get<std::vector<int>>();
    check(res.size() == 2, "'resolution' must be [width, height]");
    c.width = res[0];
    c.height = res[1];
    c.jobs = m["jobs"].get<int>();
    c.render_threads = m["render_threads"].get<int>();

    const json& o = m["osm"];
    c.osm.file = opt_path(o["file"]);
    c.osm.cache_dir = o["cache_dir"].get<std::string>();
    c.osm.fetch = o["fetch"].get<bool>();
    c.osm.endpoint = o["endpoint"].get<std::string>();
    c.osm.margin = o["margin"].get<double>();
    c.osm_strict_node_refs = o["strict_node_refs"].get<bool>();

    const json& l = m["layout"];
    c.layout.histogram_bins = l["histogram_bins"].get<int>();
    c.layout.perp_tol_bins = l["perp_tol_bins"].get<double>();
    c.layout.dominance = l["dominance"].get<double>();
    c.layout.use_area_ratio = l["use_area_ratio"].get<bool>();
    c.layout.rect_ratio = l["rect_ratio"].get<double>();
    c.layout.meters_per_level = l["meters_per_level"].get<double>();
    c.layout.default_height = l["default_height"].get<double>();

    const json& r = m["roads"];
    c.roads.weld_distance = r["weld_distance"].get<double>();
    c.roads.miter_limit = r["miter_limit"].get<double>();
    c.road_width.corridor_half_width = r["corridor_half_width"].get<double>();
    c.road_width.percentile = r["percentile"].get<double>();
    c.road_width.min_points = r["min_points"].get<std::size_t>();
    c.road_width.min_width = r["min_width"].get<double>();
    c.road_width.max_width = r["max_width"].get<double>();
    c.road_width.ground_band = r["ground_band"].get<double>();
    c.assemble.sidewalk_width = r["sidewalk_width"].get<double>();
    c.sidewalks_on_untagged_roads = r["sidewalks_on_untagged"].get<bool>();

    const json& p = m["placement"];
    c.top_k = p["top_k"].get<int>();
    c.cameras.min_mount_height = p["min_mount_height"].get<double>();
    c.cameras.min_camera_z = p["min_camera_z"].get<double>();

    const json& b = m["background"];
    c.grid.cell = b["cell"].get<double>();
    c.grid.min_height = b["min_height"].get<double>();
    c.grid.max_height = b["max_height"].get<double>();
    c.mask_margin = b["mask_margin"].get<double>();
    c.vegetation.density_coeff = b["density_coeff"].get<double>();
    c.vegetation.min_scale = b["min_scale"].get<double>();
    c.vegetation.max_scale = b["max_scale"].get<double>();
    c.roadside.spacing = b["roadside_spacing"].get<double>();
    c.roadside.offset = b["roadside_offset"].get<double>();
    c.roadside.min_scale = b["roadside_min_scale"].get<double>();
    c.roadside.max_scale = b["roadside_max_scale"].get<double>();

    const json& a = m["annotate"];
    c.near = a["near"].get<double>();
    c.far = a["far"].get<double>();
    c.min_box_pixels = a["min_box_pixels"].get<std::size_t>();
    c.flow = a["flow"].get<bool>();

    const json& q = m["curation"];
    c.curation.pixel_floor = q["pixel_floor"].get<double>();
    c.curation.min_classes = q["min_classes"].get<std::size_t>();
    c.curation.count_void = q["count_void"].get<bool>();
  } catch (const json::exception& e) {
    config_error(e.what());
  }

  check(!c.dataset_root.empty(), "'dataset_root' is required");
  check(!c.catalog.empty(), "'catalog' is required");
  check(!c.output.empty(), "'output' is required");
  check(c.cameras_per_scene >= 1 && c.cameras_per_scene <= 1000, "'cameras_per_scene' must be in [1, 1000]");
  check(c.width >= 1 && c.height >= 1 && c.width <= 16384 && c.height <= 16384, "'resolution' out of range");
  check(c.jobs >= 1 && c.render_threads >= 1, "'jobs' and 'render_threads' must be >= 1");
  check(c.osm.margin >= 0, "'osm.margin' must be >= 0");
  check(c.layout.histogram_bins >= 8 && c.layout.histogram_bins <= 720, "'layout.histogram_bins' must be in [8, 720]");
  check(c.layout.perp_tol_bins >= 0 && c.layout.perp_tol_bins <= c.layout.histogram_bins / 4.0,
        "'layout.perp_tol_bins' out of range");
  check(c.layout.dominance > 0 && c.layout.dominance <= 1, "'layout.dominance' must be in (0, 1]");
  check(c.layout.rect_ratio > 0 && c.layout.rect_ratio <= 1, "'layout.rect_ratio' must be in (0, 1]");
  check(c.layout.meters_per_level > 0 && c.layout.default_height > 0, "building heights must be positive");
  check(c.roads.weld_distance >= 0 && c.roads.miter_limit >= 1, "road network settings out of range");
  check(c.road_width.percentile > 0 && c.road_width.percentile <= 1, "'roads.percentile' must be in (0, 1]");
  check(c.road_width.min_width > 0 && c.road_width.min_width <= c.road_width.max_width, "road width bounds invalid");
  check(c.road_width.corridor_half_width > 0 && c.road_width.ground_band >= 0, "road width fit settings invalid");
  check(c.assemble.sidewalk_width > 0, "'roads.sidewalk_width' must be positive");
  check(c.top_k >= 1, "'placement.top_k' must be >= 1");
  check(c.cameras.min_mount_height > 0 && c.cameras.min_camera_z > 0, "camera heights must be positive");
  check(c.grid.cell > 0 && c.grid.min_height <= c.grid.max_height, "density grid settings invalid");
  check(c.mask_margin >= 0, "'background.mask_margin' must be >= 0");
  check(c.vegetation.density_coeff >= 0, "'background.density_coeff' must be >= 0");
  check(c.vegetation.min_scale > 0 && c.vegetation.min_scale <= c.vegetation.max_scale, "vegetation scale range invalid");
  check(c.roadside.spacing > 0 && c.roadside.offset >= 0, "roadside settings invalid");
  check(c.roadside.min_scale > 0 && c.roadside.min_scale <= c.roadside.max_scale, "roadside scale range invalid");
  check(c.near > 0 && c.far > c.near, "'annotate.near' and 'annotate.far' must satisfy 0 < near < far");
  check(c.curation.pixel_floor >= 0 && c.curation.pixel_floor <= 1, "'curation.pixel_floor' must be in [0, 1]");
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
  std::string text;
  try {
    text = read_text_file(file);
  } catch (const Error& e) {
    config_error(e.detail());
  }
  return parse_pipeline_config(text, file.parent_path());
}

std::string canonical_config(const PipelineConfig& cfg) { return config_json(cfg).dump(); }

std::string config_hash(const PipelineConfig& cfg) {
  json j = config_json(cfg);
  j.erase("jobs");
  j.erase("render_threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// stages

namespace {

LidarSweep merge_sweeps(const SceneRecord& rec) {
  LidarSweep all;
  for (const auto& s : rec.sweeps) all.points.insert(all.points.end(), s.points.begin(), s.points.end());
  return all;
}

bool inside_any_footprint(const Vec2& p, std::span<const BuildingPlan> buildings) {
  for (const auto& b : buildings) {
    if (point_in_polygon(p, b.footprint.vertices())) return true;
  }
  return false;
}

// Which side of a sidewalk line the nearest road centerline lies on.
RoadSide infer_road_side(const std::vector<Vec2>& line, std::span<const RoadPlan> roads) {
  if (line.size() < 2 || roads.empty()) return RoadSide::Unknown;
  const std::size_t k = (line.size() - 2) / 2;
  const Vec2 a = line[k];
  const Vec2 b = line[k + 1];
  const Vec2 d = b - a;
  if (d.norm() <= 0) return RoadSide::Unknown;
  const Vec2 mid = (a + b) / 2.0;
  const Vec2 left = Vec2(-d.y(), d.x()) / d.norm();
  double dl = std::numeric_limits<double>::infinity(), dr = dl;
  for (const auto& r : roads) {
    dl = std::min(dl, distance_to_polyline(mid + left * 3.0, r.centerline));
    dr = std::min(dr, distance_to_polyline(mid - left * 3.0, r.centerline));
  }
  if (dl == dr) return RoadSide::Unknown;
  return dl < dr ? RoadSide::Left : RoadSide::Right;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BuiltScene build_scene(const PipelineConfig& cfg, const std::string& scene_id, const AssetCatalog& catalog,
                       const ClassTaxonomy& /*taxonomy*/) {
  BuiltScene out;
  out.record = parse_scene_record(cfg.resolve(cfg.dataset_root), scene_id);
  const SceneRecord& rec = out.record;
  out.warnings = rec.warnings;
  const LidarSweep sweep = merge_sweeps(rec);

  // map data
  OsmSourceConfig osm = cfg.osm;
  if (osm.file) osm.file = cfg.resolve(*osm.file);
  osm.cache_dir = cfg.resolve(osm.cache_dir);
  const OsmText osm_text = resolve_osm(rec, osm);
  OsmExtract extract = parse_osm(osm_text.xml, rec.origin, {cfg.osm_strict_node_refs});
  out.warnings.insert(out.warnings.end(), extract.warnings.begin(), extract.warnings.end());

  // layout
  for (const auto& b : extract.buildings) out.plans.buildings.push_back(plan_building(b, cfg.layout));
  std::vector<double> widths;
  for (const auto& r : extract.roads) {
    widths.push_back(fit_road_width(r.centerline, r.highway_class, sweep, cfg.road_width, r.tagged_width));
  }
  out.plans.roads = build_road_network(extract.roads, widths, cfg.roads);

  // sidewalks: mapped ones plus offsets of roads that carry them
  const auto& plans = out.plans.roads.plans;
  for (auto& line : extract.sidewalks) {
    SidewalkLine s{line, infer_road_side(line, plans)};
    out.plans.sidewalks.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < extract.roads.size() && i < plans.size(); ++i) {
    const SidewalkTag tag = extract.roads[i].sidewalk;
    const bool untagged = tag == SidewalkTag::Unknown && cfg.sidewalks_on_untagged_roads;
    const bool left = tag == SidewalkTag::Left || tag == SidewalkTag::Both || untagged;
    const bool right = tag == SidewalkTag::Right || tag == SidewalkTag::Both || untagged;
    const double d = plans[i].width / 2.0 + cfg.assemble.sidewalk_width / 2.0;
    if (left) out.plans.sidewalks.push_back({offset_polyline(plans[i].centerline, d), RoadSide::Right});
    if (right) out.plans.sidewalks.push_back({offset_polyline(plans[i].centerline, -d), RoadSide::Left});
  }

  // placement
  CategoryCompat compat = CategoryCompat::defaults();
  if (cfg.category_compat) compat = CategoryCompat::parse(read_text_file(cfg.resolve(*cfg.category_compat)));
  const auto matches = match_assets(rec.objects, catalog, cfg.top_k, cfg.seed, compat);
  const auto cameras = sample_cameras(rec, cfg.cameras_per_scene, cfg.seed, cfg.cameras);

  // background
  std::vector<BackgroundInstance> background;
  if (!sweep.points.empty()) {
    out.density = mask_roads(vegetation_density(sweep, cfg.grid), plans, cfg.mask_margin);
    const std::size_t n = out.density.sum() > 0 ? vegetation_count(out.density, cfg.vegetation) : 0;
    if (n > 0) {
      for (auto& v : sample_vegetation(out.density, n, catalog, cfg.seed, cfg.vegetation)) {
        const Vec2 p = v.position.head<2>();
        if (inside_any_road(p, plans) || inside_any_footprint(p, out.plans.buildings)) continue;
        background.push_back(std::move(v));
      }
    }
  } else {
    out.warnings.push_back({Errc::EmptyDensity, "scene has no LiDAR points; no vegetation placed"});
  }
  for (auto& s : place_roadside(out.plans.sidewalks, catalog, cfg.roadside, cfg.seed)) {
    const Vec2 p = s.position.head<2>();
    if (inside_any_road(p, plans) || inside_any_footprint(p, out.plans.buildings)) continue;
    background.push_back(std::move(s));
  }

  out.graph = assemble(rec, out.plans, matches, cameras, background, catalog, cfg.seed, cfg.assemble);
  return out;
}

std::vector<std::string> write_scene_files(const BuiltScene& built, const AssetCatalog& catalog,
                                           const std::filesystem::path& dir) {
  std::vector<std::string> files;
  write_text_file(dir / "scene_graph.json", serialize_scene(built.graph));
  files.push_back("scene_graph.json");
  write_text_file(dir / "scene.gltf", export_interchange(built.graph, catalog));
  files.push_back("scene.gltf");
  if (built.density.nx > 0) {
    write_binary_file(dir / "density.png", density_png(built.density));
    write_text_file(dir / "density.txt", density_sidecar(built.density));
    files.push_back("density.png");
    files.push_back("density.txt");
  }
  return files;
}

AnnotateResult annotate_scene(const SceneGraph& scene, const AssetCatalog& catalog, const ClassTaxonomy& taxonomy,
                              const PipelineConfig& cfg, const std::filesystem::path& dir) {
  const RenderScene render = prepare_render_scene(scene, load_instance_meshes(scene, catalog));
  std::map<std::uint32_t, RigidTransform> motions;
  for (const auto& inst : scene.instances) motions[inst.id] = RigidTransform::identity();

  const std::size_t n = scene.cameras.size();
  std::vector<std::vector<std::string>> files(n);
  std::vector<SampleReport> samples(n);
  std::vector<double> seconds(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto t0 = std::chrono::steady_clock::now();
        RasterOptions opts;
        opts.width = cfg.width;
        opts.height = cfg.height;
        opts.near = cfg.near;
        opts.far = cfg.far;
        opts.min_box_pixels = cfg.min_box_pixels;
        opts.taxonomy = &taxonomy;
        AnnotationBundle bundle = rasterize(render, scene, scene.cameras[i], opts);
        if (cfg.flow && i + 1 < n) {
          bundle.flow = compute_flow(scene, scene.cameras[i], scene.cameras[i + 1], motions, bundle, nullptr, cfg.near);
        }
        char name[32];
        std::snprintf(name, sizeof name, "frames/%03zu", i);
        for (auto& f : write_bundle(bundle, dir / name, taxonomy)) files[i].push_back(std::string(name) + "/" + f);
        samples[i].image_id = name;
        samples[i].pixels = class_histogram(bundle.semantic13);
        seconds[i] = seconds_since(t0);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.render_threads, static_cast<int>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AnnotateResult result;
  result.curation = curate_histograms(std::move(samples), cfg.curation);
  for (auto& f : files) result.files.insert(result.files.end(), f.begin(), f.end());
  write_text_file(dir / "curation.csv", curation_csv(result.curation, taxonomy));
  write_text_file(dir / "curation.json", curation_json(result.curation, taxonomy));
  result.files.push_back("curation.csv");
  result.files.push_back("curation.json");
  result.seconds = std::move(seconds);
  return result;
}

std::vector<std::string> discover_scenes(const std::filesystem::path& root) {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(root)) {
    throw Error(Errc::MissingFile, "dataset root '" + root.string() + "' is not a directory");
  }
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "scene.json")) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// run

RunManifest run_pipeline(const PipelineConfig& cfg) {
  const auto output = cfg.resolve(cfg.output);
  std::filesystem::create_directories(output);
  std::filesystem::remove(output / "manifest.json");

  const auto scenes = cfg.scenes.empty() ? discover_scenes(cfg.resolve(cfg.dataset_root)) : cfg.scenes;
  if (scenes.empty()) throw Error(Errc::MissingFile, "no scenes under '" + cfg.resolve(cfg.dataset_root).string() + "'");
  const AssetCatalog catalog = load_catalog(cfg.resolve(cfg.catalog));
  ClassTaxonomy taxonomy;
  if (cfg.remap13) taxonomy.load_remap13(read_text_file(cfg.resolve(*cfg.remap13)));

  std::vector<SceneResult> results(scenes.size());
  std::vector<std::exception_ptr> errors(scenes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < scenes.size(); i = next++) {
      const std::string& id = scenes[i];
      const auto staging = output / "_incomplete" / id;
      try {
        std::filesystem::remove_all(staging);
        std::filesystem::create_directories(staging);
        const auto t0 = std::chrono::steady_clock::now();
        const BuiltScene built = build_scene(cfg, id, catalog, taxonomy);
        SceneResult r;
        r.scene_id = id;
        r.files = write_scene_files(built, catalog, staging);
        r.timings.scene_build_seconds = seconds_since(t0);
        AnnotateResult ann = annotate_scene(built.graph, catalog, taxonomy, cfg, staging);
        r.files.insert(r.files.end(), ann.files.begin(), ann.files.end());
        std::sort(r.files.begin(), r.files.end());
        r.timings.annotate_seconds = std::move(ann.seconds);
        r.images = built.graph.cameras.size();
        r.kept = ann.curation.kept_count();
        r.kept_histogram = ann.curation.aggregate;
        r.instances = built.graph.instances.size();
        r.warnings = built.warnings.size();
        r.directory = id;
        for (const auto& w : built.warnings) log_warning(w);

        const auto final_dir = output / id;
        std::filesystem::remove_all(final_dir);
        std::filesystem::rename(staging, final_dir);
        results[i] = std::move(r);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(scenes.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "scene '" + scenes[i] + "': " + e.detail());
    } catch (const std::filesystem::filesystem_error& e) {
      throw Error(Errc::IoError, "scene '" + scenes[i] + "': " + e.what());
    }
  }

  std::error_code ec;
  std::filesystem::remove(output / "_incomplete", ec);  // only succeeds when empty

  RunManifest manifest;
  manifest.config_hash = config_hash(cfg);
  manifest.seed = cfg.seed;
  manifest.scenes = std::move(results);
  write_text_file(output / "manifest.json.tmp", manifest_json(manifest));
  std::filesystem::rename(output / "manifest.json.tmp", output / "manifest.json");
  return manifest;
}

// ---------------------------------------------------------------------------
// manifest and stats

std::string manifest_json(const RunManifest& m) {
  const auto& tax = ClassTaxonomy::standard();
  json scenes = json::array();
  for (const auto& s : m.scenes) {
    json hist = json::object();
    for (std::size_t c = 0; c < kNumClasses13; ++c) hist[tax.names13()[c]] = s.kept_histogram[c];
    scenes.push_back({{"scene_id", s.scene_id},
                      {"directory", s.directory.generic_string()},
                      {"files", s.files},
                      {"images", s.images},
                      {"kept", s.kept},
                      {"kept_histogram", std::move(hist)},
                      {"instances", s.instances},
                      {"warnings", s.warnings},
                      {"timings",
                       {{"scene_build_seconds", s.timings.scene_build_seconds},
                        {"annotate_seconds", s.timings.annotate_seconds}}}});
  }
  json j = {{"tool_version", m.tool_version}, {"config_hash", m.config_hash}, {"seed", m.seed}, {"scenes", scenes}};
  return j.dump(1) + "\n";
}

RunManifest parse_manifest(std::string_view text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const json& s : j.at("scenes")) {
      SceneResult r;
      r.scene_id = s.at("scene_id").get<std::string>();
      r.directory = s.at("directory").get<std::string>();
      r.files = s.at("files").get<std::vector<std::string>>();
      r.images = s.at("images").get<std::size_t>();
      r.kept = s.at("kept").get<std::size_t>();
      for (auto it = s.at("kept_histogram").begin(); it != s.at("kept_histogram").end(); ++it) {
        const auto c = ClassTaxonomy::standard().find13(it.key());
        if (!c) throw Error(Errc::CorruptStream, "manifest: unknown class '" + it.key() + "'");
        r.kept_histogram[static_cast<std::size_t>(*c)] = it.value().get<std::uint64_t>();
      }
      r.instances = s.at("instances").get<std::size_t>();
      r.warnings = s.at("warnings").get<std::size_t>();
      r.timings.scene_build_seconds = s.at("timings").at("scene_build_seconds").get<double>();
      r.timings.annotate_seconds = s.at("timings").at("annotate_seconds").get<std::vector<double>>();
      m.scenes.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptStream, std::string("manifest: ") + e.what());
  }
  return m;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::string stats_report(const std::vector<RunManifest>& manifests, bool csv, const ClassTaxonomy& taxonomy) {
  std::size_t scenes = 0, images = 0, kept = 0, instances = 0;
  ClassHistogram hist{};
  std::vector<double> build, annotate;
  for (const auto& m : manifests) {
    for (const auto& s : m.scenes) {
      ++scenes;
      images += s.images;
      kept += s.kept;
      instances += s.instances;
      for (std::size_t c = 0; c < kNumClasses13; ++c) hist[c] += s.kept_histogram[c];
      build.push_back(s.timings.scene_build_seconds);
      annotate.insert(annotate.end(), s.timings.annotate_seconds.begin(), s.timings.annotate_seconds.end());
    }
  }
  std::uint64_t total = 0;
  for (auto c : hist) total += c;

  std::ostringstream out;
  char buf[160];
  if (csv) {
    out << "section,name,value\n";
    out << "count,scenes," << scenes << "\n"
        << "count,images," << images << "\n"
        << "count,kept_images," << kept << "\n"
        << "count,instances," << instances << "\n";
    for (std::size_t c = 0; c < kNumClasses13; ++c) {
      if (hist[c] == 0) continue;
      std::snprintf(buf, sizeof buf, "class_fraction,%s,%.6f\n", class_slug(taxonomy.names13()[c]).c_str(),
                    static_cast<double>(hist[c]) / static_cast<double>(total));
      out << buf;
    }
    for (const auto& [label, values] : {std::pair{"scene_build_seconds", &build}, std::pair{"annotate_seconds", &annotate}}) {
      std::snprintf(buf, sizeof buf, "timing,%s_p50,%.3f\ntiming,%s_p90,%.3f\ntiming,%s_max,%.3f\n", label,
                    percentile(*values, 0.5), label, percentile(*values, 0.9), label, percentile(*values, 1.0));
      out << buf;
    }
    return out.str();
  }
  out << "scenes: " << scenes << "\n"
      << "images: " << images << "\n"
      << "kept images: " << kept << "\n"
      << "instances: " << instances << "\n"
      << "class distribution over kept images:\n";
  for (std::size_t c = 0; c < kNumClasses13; ++c) {
    if (hist[c] == 0) continue;
    std::snprintf(buf, sizeof buf, "  %-14s %12llu  %8.4f%%\n", taxonomy.names13()[c].c_str(),
                  static_cast<unsigned long long>(hist[c]), 100.0 * static_cast<double>(hist[c]) / static_cast<double>(total));
    out << buf;
  }
  for (const auto& [label, values] : {std::pair{"scene build seconds", &build}, std::pair{"annotate seconds per image", &annotate}}) {
    std::snprintf(buf, sizeof buf, "%s: p50 %.3f  p90 %.3f  max %.3f\n", label, percentile(*values, 0.5),
                  percentile(*values, 0.9), percentile(*values, 1.0));
    out << buf;
  }
  return out.str();
}

}  // namespace trove
