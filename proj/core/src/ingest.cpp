#include "trove/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace trove {

using nlohmann::json;

// ---------------------------------------------------------------------------
// projection

Vec2 geo_to_local(const GeoOrigin& origin, double lat, double lon) {
  constexpr double deg = kPi / 180.0;
  const double x = (lon - origin.lon) * std::cos(origin.lat * deg) * deg * kEarthRadius;
  const double y = (lat - origin.lat) * deg * kEarthRadius;
  return {x, y};
}

std::pair<double, double> local_to_geo(const GeoOrigin& origin, const Vec2& xy) {
  constexpr double deg = kPi / 180.0;
  const double lat = origin.lat + xy.y() / (deg * kEarthRadius);
  const double lon = origin.lon + xy.x() / (std::cos(origin.lat * deg) * deg * kEarthRadius);
  return {lat, lon};
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

CameraRig CameraRig::resized(int new_width, int new_height) const {
  CameraRig r = *this;
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  r.intrinsics = {intrinsics.fx * sx, intrinsics.fy * sy, intrinsics.cx * sx, intrinsics.cy * sy};
  r.width = new_width;
  r.height = new_height;
  return r;
}

bool LidarSweep::labeled() const {
  return std::any_of(points.begin(), points.end(), [](const LidarPoint& p) { return p.label >= 0; });
}

double quaternion_to_yaw(double w, double x, double y, double z) {
  return normalize_angle(std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error(Errc::IoError, "short write to '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// JSON field access with SchemaViolation naming the offending field

namespace {

[[noreturn]] void violation(const std::string& field, const std::string& why) {
  throw Error(Errc::SchemaViolation, field + ": " + why);
}

const json& member(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) violation(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) violation(path + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) violation(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) violation(path, "not finite");
  return v;
}

std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) violation(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) violation(path, "expected a string");
  return j.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) violation(path, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Quat quat_wxyz(const json& j, const std::string& path) {
  const auto q = vec<4>(j, path);
  const double n = q.norm();
  if (std::abs(n - 1.0) > 1e-3) violation(path, "quaternion is not unit length");
  return Quat(q[0], q[1], q[2], q[3]).normalized();
}

json quat_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

RigidTransform transform(const json& j, const std::string& path) {
  return {quat_wxyz(member(j, "rotation", path), path + ".rotation"),
          vec<3>(member(j, "translation", path), path + ".translation")};
}

json transform_json(const RigidTransform& t) {
  return json{{"rotation", quat_json(t.rotation)}, {"translation", vec_json(t.translation)}};
}

}  // namespace

// ---------------------------------------------------------------------------
// scene record

SceneRecord parse_scene_json(std::string_view text_in, const std::filesystem::path& scene_dir,
                             bool load_sweeps) {
  json j;
  try {
    j = json::parse(text_in);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("scene.json is not valid JSON: ") + e.what());
  }
  try {
    SceneRecord rec;
    rec.directory = scene_dir;
    const std::string schema = text(member(j, "schema", "$"), "$.schema");
    if (schema != "trove-in/1") violation("$.schema", "unsupported schema '" + schema + "'");
    rec.scene_id = text(member(j, "scene_id", "$"), "$.scene_id");

    const json& go = member(j, "geo_origin", "$");
    rec.origin.lat = number(member(go, "lat", "$.geo_origin"), "$.geo_origin.lat");
    rec.origin.lon = number(member(go, "lon", "$.geo_origin"), "$.geo_origin.lon");
    if (go.contains("alt")) rec.origin.alt = number(go["alt"], "$.geo_origin.alt");
    if (rec.origin.lat < -90 || rec.origin.lat > 90) violation("$.geo_origin.lat", "out of [-90, 90]");
    if (rec.origin.lon < -180 || rec.origin.lon > 180) violation("$.geo_origin.lon", "out of [-180, 180]");

    const json& poses = member(j, "ego_poses", "$");
    if (!poses.is_array()) violation("$.ego_poses", "expected an array");
    for (std::size_t i = 0; i < poses.size(); ++i) {
      const std::string p = "$.ego_poses[" + std::to_string(i) + "]";
      EgoPose e;
      e.timestamp = integer(member(poses[i], "timestamp", p), p + ".timestamp");
      e.scene_from_ego = transform(poses[i], p);
      rec.ego_poses.push_back(e);
    }
    if (rec.ego_poses.empty()) throw Error(Errc::EmptyScene, "scene '" + rec.scene_id + "' has no ego poses");
    std::stable_sort(rec.ego_poses.begin(), rec.ego_poses.end(),
                     [](const EgoPose& a, const EgoPose& b) { return a.timestamp < b.timestamp; });

    const json& cams = member(j, "cameras", "$");
    if (!cams.is_array() || cams.empty()) violation("$.cameras", "expected a non-empty array");
    for (std::size_t i = 0; i < cams.size(); ++i) {
      const std::string p = "$.cameras[" + std::to_string(i) + "]";
      CameraRig rig;
      rig.name = text(member(cams[i], "name", p), p + ".name");
      const json& k = member(cams[i], "intrinsics", p);
      if (!k.is_array() || k.size() != 3) violation(p + ".intrinsics", "expected a 3x3 matrix");
      Mat3 km;
      for (int r = 0; r < 3; ++r) {
        const auto row = vec<3>(k[r], p + ".intrinsics[" + std::to_string(r) + "]");
        km.row(r) = row.transpose();
      }
      if (km(0, 1) != 0.0 || km(1, 0) != 0.0 || km(2, 0) != 0.0 || km(2, 1) != 0.0 || km(2, 2) != 1.0) {
        violation(p + ".intrinsics", "expected zero skew and last row (0, 0, 1)");
      }
      rig.intrinsics = {km(0, 0), km(1, 1), km(0, 2), km(1, 2)};
      const auto size = vec<2>(member(cams[i], "image_size", p), p + ".image_size");
      rig.width = static_cast<int>(size[0]);
      rig.height = static_cast<int>(size[1]);
      if (rig.width <= 0 || rig.height <= 0) violation(p + ".image_size", "must be positive");
      if (rig.intrinsics.fx <= 0 || rig.intrinsics.fy <= 0) violation(p + ".intrinsics", "focal lengths must be > 0");
      if (!(rig.intrinsics.cx > 0 && rig.intrinsics.cx < rig.width && rig.intrinsics.cy > 0 &&
            rig.intrinsics.cy < rig.height)) {
        violation(p + ".intrinsics", "principal point outside the image");
      }
      rig.camera_from_ego = transform(member(cams[i], "ego_from_camera", p), p + ".ego_from_camera").inverse();
      rec.cameras.push_back(std::move(rig));
    }

    const json& objs = member(j, "objects", "$");
    if (!objs.is_array()) violation("$.objects", "expected an array");
    std::set<std::string> ids;
    const auto& tax = ClassTaxonomy::standard();
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string p = "$.objects[" + std::to_string(i) + "]";
      const json& o = objs[i];
      ObjectBox b;
      b.id = text(member(o, "id", p), p + ".id");
      if (!ids.insert(b.id).second) violation(p + ".id", "duplicate id '" + b.id + "'");
      const std::string cat = text(member(o, "category", p), p + ".category");
      auto c = tax.find20(cat);
      if (!c) violation(p + ".category", "unknown class '" + cat + "'");
      b.category = *c;
      b.center = vec<3>(member(o, "center", p), p + ".center");
      b.size = vec<3>(member(o, "size", p), p + ".size");
      if (b.size.x() <= 0) violation(p + ".size[0]", "length must be > 0");
      if (b.size.y() <= 0) violation(p + ".size[1]", "width must be > 0");
      if (b.size.z() <= 0) violation(p + ".size[2]", "height must be > 0");
      if (o.contains("yaw")) {
        b.yaw = normalize_angle(number(o["yaw"], p + ".yaw"));
      } else if (o.contains("rotation")) {
        const Quat q = quat_wxyz(o["rotation"], p + ".rotation");
        b.yaw = quaternion_to_yaw(q.w(), q.x(), q.y(), q.z());
      } else {
        violation(p + ".yaw", "missing (give yaw or rotation)");
      }
      b.timestamp = integer(member(o, "timestamp", p), p + ".timestamp");
      rec.objects.push_back(std::move(b));
    }
    std::sort(rec.objects.begin(), rec.objects.end(), [](const ObjectBox& a, const ObjectBox& b) {
      return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
    });

    if (j.contains("lidar")) {
      const json& l = j["lidar"];
      if (!l.is_array()) violation("$.lidar", "expected an array");
      for (std::size_t i = 0; i < l.size(); ++i) {
        const std::string p = "$.lidar[" + std::to_string(i) + "]";
        SweepRef s{text(member(l[i], "path", p), p + ".path"),
                   integer(member(l[i], "timestamp", p), p + ".timestamp")};
        rec.sweep_refs.push_back(std::move(s));
      }
    }
    if (j.contains("osm")) rec.osm_file = text(j["osm"], "$.osm");

    if (load_sweeps) {
      for (const auto& ref : rec.sweep_refs) {
        auto r = parse_lidar(scene_dir / ref.path);
        r.sweep.timestamp = ref.timestamp;
        rec.sweeps.push_back(std::move(r.sweep));
        for (auto& w : r.warnings) rec.warnings.push_back(std::move(w));
      }
    }
    return rec;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, e.what());
  }
}

SceneRecord parse_scene_record(const std::filesystem::path& dataset_root, const std::string& scene_id) {
  const auto dir = dataset_root / scene_id;
  const auto file = dir / "scene.json";
  if (!std::filesystem::exists(file)) throw Error(Errc::MissingFile, "missing '" + file.string() + "'");
  auto rec = parse_scene_json(read_text_file(file), dir, true);
  if (rec.scene_id != scene_id) {
    violation("$.scene_id", "'" + rec.scene_id + "' does not match directory '" + scene_id + "'");
  }
  return rec;
}

std::string serialize_scene_record(const SceneRecord& rec) {
  const auto& tax = ClassTaxonomy::standard();
  json j;
  j["schema"] = "trove-in/1";
  j["scene_id"] = rec.scene_id;
  j["geo_origin"] = {{"lat", rec.origin.lat}, {"lon", rec.origin.lon}, {"alt", rec.origin.alt}};
  j["ego_poses"] = json::array();
  for (const auto& e : rec.ego_poses) {
    json p = transform_json(e.scene_from_ego);
    p["timestamp"] = e.timestamp;
    j["ego_poses"].push_back(p);
  }
  j["cameras"] = json::array();
  for (const auto& c : rec.cameras) {
    const auto& k = c.intrinsics;
    j["cameras"].push_back({{"name", c.name},
                            {"intrinsics", {{k.fx, 0.0, k.cx}, {0.0, k.fy, k.cy}, {0.0, 0.0, 1.0}}},
                            {"image_size", {c.width, c.height}},
                            {"ego_from_camera", transform_json(c.camera_from_ego.inverse())}});
  }
  j["objects"] = json::array();
  for (const auto& o : rec.objects) {
    j["objects"].push_back({{"id", o.id},
                            {"category", std::string(tax.name(o.category))},
                            {"center", vec_json(o.center)},
                            {"size", vec_json(o.size)},
                            {"yaw", o.yaw},
                            {"timestamp", o.timestamp}});
  }
  j["lidar"] = json::array();
  for (const auto& s : rec.sweep_refs) j["lidar"].push_back({{"path", s.path}, {"timestamp", s.timestamp}});
  if (rec.osm_file) j["osm"] = *rec.osm_file;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// asset catalog

std::string_view to_string(SurfaceRole role) {
  switch (role) {
    case SurfaceRole::Facade: return "facade";
    case SurfaceRole::Road: return "road";
    case SurfaceRole::Sidewalk: return "sidewalk";
    case SurfaceRole::Terrain: return "terrain";
  }
  return "facade";
}

Class20 Asset::render_class() const {
  if (category == kPoleCategory) return Class20::TrafficSign;
  return ClassTaxonomy::standard().find20(category).value_or(Class20::Void);
}

const Asset* AssetCatalog::find(std::string_view asset_id) const {
  for (const auto& a : assets) {
    if (a.asset_id == asset_id) return &a;
  }
  return nullptr;
}

std::vector<const Asset*> AssetCatalog::by_category(std::string_view category) const {
  std::vector<const Asset*> out;
  for (const auto& a : assets) {
    if (a.category == category) out.push_back(&a);
  }
  return out;
}

AssetCatalog parse_catalog(std::string_view text_in, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text_in);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("catalog is not valid JSON: ") + e.what());
  }
  try {
    AssetCatalog cat;
    cat.base_dir = base_dir;
    const std::string schema = text(member(j, "schema", "$"), "$.schema");
    if (schema != "trove-catalog/1") violation("$.schema", "unsupported schema '" + schema + "'");
    const auto& tax = ClassTaxonomy::standard();
    const json& assets = member(j, "assets", "$");
    if (!assets.is_array()) violation("$.assets", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < assets.size(); ++i) {
      const std::string p = "$.assets[" + std::to_string(i) + "]";
      Asset a;
      a.asset_id = text(member(assets[i], "asset_id", p), p + ".asset_id");
      if (!ids.insert(a.asset_id).second) violation(p + ".asset_id", "duplicate '" + a.asset_id + "'");
      a.category = text(member(assets[i], "category", p), p + ".category");
      if (a.category != kPoleCategory) {
        auto c = tax.find20(a.category);
        if (!c) violation(p + ".category", "unknown category '" + a.category + "'");
        a.category = tax.name(*c);
      }
      a.bbox_dims = vec<3>(member(assets[i], "bbox_dims", p), p + ".bbox_dims");
      if ((a.bbox_dims.array() <= 0).any()) violation(p + ".bbox_dims", "dimensions must be > 0");
      a.mesh_ref = text(member(assets[i], "mesh_ref", p), p + ".mesh_ref");
      cat.assets.push_back(std::move(a));
    }
    const json& mats = member(j, "materials", "$");
    if (!mats.is_array()) violation("$.materials", "expected an array");
    for (std::size_t i = 0; i < mats.size(); ++i) {
      const std::string p = "$.materials[" + std::to_string(i) + "]";
      Material m;
      m.material_id = text(member(mats[i], "material_id", p), p + ".material_id");
      const std::string role = text(member(mats[i], "surface_role", p), p + ".surface_role");
      bool found = false;
      for (auto r : kSurfaceRoles) {
        if (to_string(r) == role) {
          m.role = r;
          found = true;
        }
      }
      if (!found) violation(p + ".surface_role", "unknown role '" + role + "'");
      cat.materials.push_back(std::move(m));
    }
    for (auto r : kSurfaceRoles) {
      const bool any = std::any_of(cat.materials.begin(), cat.materials.end(),
                                   [&](const Material& m) { return m.role == r; });
      if (!any) violation("$.materials", "no material for surface role '" + std::string(to_string(r)) + "'");
    }
    const json& hdris = member(j, "hdris", "$");
    if (!hdris.is_array() || hdris.empty()) violation("$.hdris", "expected a non-empty array");
    for (std::size_t i = 0; i < hdris.size(); ++i) {
      cat.hdris.push_back(text(hdris[i], "$.hdris[" + std::to_string(i) + "]"));
    }
    return cat;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, e.what());
  }
}

AssetCatalog load_catalog(const std::filesystem::path& file) {
  return parse_catalog(read_text_file(file), file.parent_path());
}

std::string serialize_catalog(const AssetCatalog& cat) {
  json j;
  j["schema"] = "trove-catalog/1";
  j["assets"] = json::array();
  for (const auto& a : cat.assets) {
    j["assets"].push_back({{"asset_id", a.asset_id},
                           {"category", a.category},
                           {"bbox_dims", vec_json(a.bbox_dims)},
                           {"mesh_ref", a.mesh_ref}});
  }
  j["materials"] = json::array();
  for (const auto& m : cat.materials) {
    j["materials"].push_back({{"material_id", m.material_id}, {"surface_role", std::string(to_string(m.role))}});
  }
  j["hdris"] = cat.hdris;
  return j.dump(2) + "\n";
}

}  // namespace trove
