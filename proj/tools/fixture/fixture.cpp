#include "fixture.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "trove/mesh.hpp"
#include "trove/raster_io.hpp"
#include "trove/rng.hpp"

namespace trove::fixture {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const GeoOrigin kOrigin{42.3368, -71.0578, 0.0};
constexpr std::int64_t kT0 = 1'533'151'603'000'000;
constexpr std::int64_t kFrameStep = 500'000;

struct FixtureBuilding {
  std::vector<Vec2> footprint;
  int levels;
};

std::vector<Vec2> rotated_rect(const Vec2& c, double l, double w, double yaw) {
  OrientedBox2 b{c, Vec2(l / 2, w / 2), yaw};
  const auto k = b.corners();
  return {k.begin(), k.end()};
}

std::vector<FixtureBuilding> buildings() {
  return {
      {rotated_rect({30, 20}, 20, 12, 10.0 * kPi / 180.0), 4},
      {rotated_rect({-30, -25}, 15, 15, 0.0), 3},
      {{{-45, 20}, {-25, 20}, {-25, 30}, {-35, 30}, {-35, 40}, {-45, 40}}, 2},
  };
}

// ego_from_camera rotation for a forward camera turned `yaw` about +z.
Mat3 camera_axes(double yaw) {
  Mat3 base;
  base << 0, 0, 1,  //
      -1, 0, 0,     //
      0, -1, 0;
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix() * base;
}

CameraRig rig(const std::string& name, double yaw, const Vec3& mount) {
  CameraRig r;
  r.name = name;
  r.intrinsics = {1266.4, 1266.4, 816.3, 491.5};
  r.width = 1600;
  r.height = 900;
  r.camera_from_ego = RigidTransform::from_matrix(camera_axes(yaw), mount).inverse();
  return r;
}

ObjectBox object(const std::string& id, Class20 c, const Vec2& xy, double base_z, const Vec3& size, double yaw) {
  ObjectBox o;
  o.id = id;
  o.category = c;
  o.center = Vec3(xy.x(), xy.y(), base_z + size.z() / 2);
  o.size = size;
  o.yaw = normalize_angle(yaw);
  o.timestamp = kT0;
  return o;
}

LidarPoint point(double x, double y, double z, Class20 c) {
  return {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), static_cast<std::int8_t>(c)};
}

std::vector<LidarPoint> lidar_points(const Options& o) {
  Rng rng(o.seed);
  const std::size_t n = o.lidar_points;
  const std::size_t n_road = n * 35 / 100;
  const std::size_t n_veg = n * 30 / 100;
  const std::size_t n_bldg = n * 15 / 100;
  const std::size_t n_ground = n - n_road - n_veg - n_bldg;
  std::vector<LidarPoint> pts;
  pts.reserve(n);

  // road A along x, road B along y north of the junction
  const std::size_t n_road_a = n_road * 5 / 7;
  for (std::size_t i = 0; i < n_road; ++i) {
    if (i < n_road_a) {
      pts.push_back(point(rng.uniform(-80, 80), rng.uniform(-3.1, 3.1), 0.0, Class20::Road));
    } else {
      pts.push_back(point(rng.uniform(-3.0, 3.0), rng.uniform(8, 80), 0.0, Class20::Road));
    }
  }

  const std::array<Vec2, 3> clusters = {Vec2(50, 15), Vec2(-55, -15), Vec2(15, 40)};
  for (std::size_t i = 0; i < n_veg; ++i) {
    const Vec2& c = clusters[i % clusters.size()];
    Vec2 d;
    do {
      d = Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5));
    } while (d.squaredNorm() > 25.0);
    const double x = c.x() + d.x();
    const double y = c.y() + d.y();
    const bool tree = rng.uniform01() < 0.7;
    pts.push_back(point(x, y, tree ? rng.uniform(2.0, 6.0) : rng.uniform(1.0, 2.0),
                        tree ? Class20::Trees : Class20::Bushes));
  }

  const auto bl = buildings();
  for (std::size_t i = 0; i < n_bldg; ++i) {
    const auto& b = bl[i % bl.size()];
    const std::size_t k = rng.index(b.footprint.size());
    const Vec2& a = b.footprint[k];
    const Vec2& c = b.footprint[(k + 1) % b.footprint.size()];
    const Vec2 p = a + rng.uniform01() * (c - a);
    pts.push_back(point(p.x(), p.y(), rng.uniform(0.0, 3.0 * b.levels), Class20::Building));
  }

  for (std::size_t i = 0; i < n_ground;) {
    const double x = rng.uniform(-80, 80);
    const double y = rng.uniform(-60, 80);
    if (std::abs(y) < 7.0 || (std::abs(x) < 7.0 && y > 0)) continue;
    bool inside = false;
    for (const auto& b : bl) inside = inside || point_in_polygon({x, y}, b.footprint);
    if (inside) continue;
    pts.push_back(point(x, y, 0.0, Class20::Ground));
    ++i;
  }
  return pts;
}

}  // namespace

SceneRecord fixture_record(const Options& o) {
  SceneRecord rec;
  rec.scene_id = std::string(kSceneId);
  rec.origin = kOrigin;
  for (int i = 0; i < o.ego_poses; ++i) {
    EgoPose e;
    e.timestamp = kT0 + i * kFrameStep;
    e.scene_from_ego = RigidTransform::from_yaw(0.0, Vec3(-40.0 + 5.0 * i, -1.5, 0.0));
    rec.ego_poses.push_back(e);
  }
  rec.cameras.push_back(rig("CAM_FRONT", 0.0, Vec3(1.7, 0.0, 1.5)));
  rec.cameras.push_back(rig("CAM_FRONT_LEFT", 55.0 * kPi / 180.0, Vec3(1.5, 0.5, 1.5)));

  rec.objects = {
      object("car-0001", Class20::Car, {10, 1.5}, 0.0, {4.5, 1.9, 1.6}, kPi),
      object("car-0002", Class20::Car, {-20, 1.6}, 0.0, {4.5, 1.9, 1.6}, kPi),
      object("ped-0001", Class20::Human, {12, 4.2}, 0.15, {0.6, 0.6, 1.75}, 0.0),
      object("ped-0002", Class20::Human, {-15, -4.2}, 0.15, {0.6, 0.6, 1.75}, kPi / 2),
      object("truck-0001", Class20::Truck, {25, 1.7}, 0.0, {8.0, 2.5, 3.2}, kPi),
      object("van-0001", Class20::Van, {-1.5, 30}, 0.0, {5.0, 2.0, 2.2}, kPi / 2),
  };

  auto pts = lidar_points(o);
  const std::size_t half = pts.size() / 2;
  for (int s = 0; s < 2; ++s) {
    LidarSweep sweep;
    sweep.timestamp = kT0 + s * kFrameStep;
    sweep.points.assign(pts.begin() + (s == 0 ? 0 : static_cast<std::ptrdiff_t>(half)),
                        s == 0 ? pts.begin() + static_cast<std::ptrdiff_t>(half) : pts.end());
    char name[32];
    std::snprintf(name, sizeof name, "lidar/sweep_%03d.bin", s);
    rec.sweep_refs.push_back({name, sweep.timestamp});
    rec.sweeps.push_back(std::move(sweep));
  }
  rec.osm_file = "map.osm";
  return rec;
}

std::string fixture_osm(const GeoOrigin& origin) {
  std::string xml = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"trove-fixture\">\n";
  std::int64_t next_node = 1;
  auto node = [&](const Vec2& p) {
    const auto [lat, lon] = local_to_geo(origin, p);
    char buf[160];
    std::snprintf(buf, sizeof buf, "  <node id=\"%lld\" lat=\"%.9f\" lon=\"%.9f\"/>\n",
                  static_cast<long long>(next_node), lat, lon);
    xml += buf;
    return next_node++;
  };
  std::string ways;
  std::int64_t next_way = 100;
  auto way = [&](const std::vector<std::int64_t>& refs, const std::vector<std::pair<std::string, std::string>>& tags) {
    ways += "  <way id=\"" + std::to_string(next_way++) + "\">\n";
    for (auto r : refs) ways += "    <nd ref=\"" + std::to_string(r) + "\"/>\n";
    for (const auto& [k, v] : tags) ways += "    <tag k=\"" + k + "\" v=\"" + v + "\"/>\n";
    ways += "  </way>\n";
  };

  const auto west = node({-80, 0});
  const auto junction = node({0, 0});
  const auto east = node({80, 0});
  const auto north = node({0, 80});
  way({west, junction, east}, {{"highway", "residential"}, {"name", "Fixture Street"}});
  way({junction, north}, {{"highway", "residential"}, {"sidewalk", "both"}});
  for (const auto& b : buildings()) {
    std::vector<std::int64_t> refs;
    for (const auto& p : b.footprint) refs.push_back(node(p));
    refs.push_back(refs.front());
    way(refs, {{"building", "yes"}, {"building:levels", std::to_string(b.levels)}});
  }
  return xml + ways + "</osm>\n";
}

AssetCatalog fixture_catalog() {
  AssetCatalog cat;
  auto add = [&](const std::string& id, const std::string& category, const Vec3& dims) {
    cat.assets.push_back({id, category, dims, "meshes/" + id + ".obj"});
  };
  add("sedan_a", "car", {4.6, 1.8, 1.45});
  add("suv_a", "car", {4.8, 1.95, 1.75});
  add("jeep_a", "jeep", {4.2, 1.9, 1.9});
  add("bus_a", "bus", {12.0, 2.55, 3.2});
  add("truck_a", "truck", {7.5, 2.4, 3.0});
  add("van_a", "van", {5.2, 2.0, 2.3});
  add("human_a", "human", {0.55, 0.55, 1.75});
  add("human_b", "human", {0.6, 0.5, 1.6});
  add("cyclist_a", "cycle rider", {1.8, 0.6, 1.7});
  add("motorcyclist_a", "motorcycle rider", {2.1, 0.8, 1.6});
  add("excavator_a", "construction (vehicle)", {6.0, 2.8, 3.2});
  add("cone_a", "traffic cone", {0.4, 0.4, 0.7});
  add("barrier_a", "barrier", {2.0, 0.5, 1.0});
  add("oak_a", "trees", {4.0, 4.0, 7.0});
  add("pine_a", "trees", {3.0, 3.0, 9.0});
  add("shrub_a", "bushes", {1.5, 1.5, 1.2});
  add("stop_sign_a", "traffic sign", {0.1, 0.75, 2.5});
  add("street_pole_a", std::string(kPoleCategory), {0.3, 0.3, 6.0});
  add("block_small", "building", {14.0, 14.0, 9.0});
  add("block_long", "building", {20.0, 12.0, 12.0});
  cat.materials = {{"brick_red", SurfaceRole::Facade},    {"concrete_panel", SurfaceRole::Facade},
                   {"asphalt_fine", SurfaceRole::Road},   {"asphalt_worn", SurfaceRole::Road},
                   {"paving_slabs", SurfaceRole::Sidewalk}, {"grass_short", SurfaceRole::Terrain}};
  cat.hdris = {"overcast_noon", "clear_morning", "sunset_haze"};
  return cat;
}

Paths write_fixture(const fs::path& root, const Options& o) {
  Paths p;
  p.root = root;
  p.dataset_root = root / "dataset";
  p.scene_dir = p.dataset_root / std::string(kSceneId);
  p.catalog = root / "catalog" / "catalog.json";
  p.config = root / "config.json";
  p.output = root / "out";
  fs::create_directories(p.scene_dir / "lidar");
  fs::create_directories(p.catalog.parent_path() / "meshes");

  const SceneRecord rec = fixture_record(o);
  write_text_file(p.scene_dir / "scene.json", serialize_scene_record(rec));
  for (std::size_t i = 0; i < rec.sweeps.size(); ++i) {
    const auto bytes = serialize_lidar(rec.sweeps[i]);
    write_binary_file(p.scene_dir / rec.sweep_refs[i].path,
                      {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  }
  write_text_file(p.scene_dir / "map.osm", fixture_osm(rec.origin));

  AssetCatalog cat = fixture_catalog();
  for (const auto& a : cat.assets) write_text_file(p.catalog.parent_path() / a.mesh_ref, write_obj(box_mesh(a.bbox_dims)));
  write_text_file(p.catalog, serialize_catalog(cat));

  json cfg = {{"dataset_root", "dataset"},
              {"catalog", "catalog/catalog.json"},
              {"output", "out"},
              {"seed", o.pipeline_seed},
              {"cameras_per_scene", o.cameras_per_scene},
              {"resolution", {o.width, o.height}}};
  write_text_file(p.config, cfg.dump(2) + "\n");
  return p;
}

}  // namespace trove::fixture
