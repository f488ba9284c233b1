#include "trove/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <limits>

#include "trove/error.hpp"
#include "trove/rng.hpp"

namespace trove {

using nlohmann::json;

namespace {

constexpr std::string_view kBuildingCategory = "building";

const char* role_key(SurfaceRole r) { return to_string(r).data(); }

std::optional<SurfaceRole> parse_role(std::string_view s) {
  for (auto r : kSurfaceRoles) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

Vec3 quantize(const Vec3& v) { return {quantize9(v.x()), quantize9(v.y()), quantize9(v.z())}; }

RigidTransform quantize(const RigidTransform& t) {
  Quat q = t.rotation.normalized();
  if (q.w() < 0 || (q.w() == 0 && (q.x() < 0 || (q.x() == 0 && (q.y() < 0 || (q.y() == 0 && q.z() < 0)))))) {
    q.coeffs() = -q.coeffs();
  }
  return {Quat(quantize9(q.w()), quantize9(q.x()), quantize9(q.y()), quantize9(q.z())), quantize(t.translation)};
}

// Box of an asset fitted to a rectangular footprint of the given height.
struct BuildingFit {
  const Asset* asset = nullptr;
  double scale = 1.0;
};

BuildingFit fit_building(const RectReplace& rect, double height, std::span<const Asset* const> assets) {
  ObjectBox query;
  query.size = Vec3(rect.extents.x(), rect.extents.y(), height);
  BuildingFit best;
  double best_score = -1.0;
  for (const Asset* a : assets) {
    const double score = iou3d(query, a->bbox_dims);
    if (score > best_score || (score == best_score && a->asset_id < best.asset->asset_id)) {
      best_score = score;
      best = {a, fit_scale(query.size, a->bbox_dims)};
    }
  }
  return best;
}

}  // namespace

double quantize9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  const double q = std::strtod(buf, nullptr);
  return q == 0.0 ? 0.0 : q;  // folds -0
}

const SceneInstance* SceneGraph::find(std::uint32_t id) const {
  if (id >= 1 && id <= instances.size() && instances[id - 1].id == id) return &instances[id - 1];
  for (const auto& inst : instances) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

void canonicalize(SceneGraph& scene) {
  scene.meta.origin = {quantize9(scene.meta.origin.lat), quantize9(scene.meta.origin.lon),
                       quantize9(scene.meta.origin.alt)};
  for (auto& inst : scene.instances) {
    inst.pose = quantize(inst.pose);
    inst.scale = quantize9(inst.scale);
    inst.size = quantize(inst.size);
  }
  for (auto& m : scene.meshes) {
    for (auto& v : m.mesh.vertices) v = quantize(v);
  }
  for (auto& cam : scene.cameras) {
    cam.camera_from_scene = quantize(cam.camera_from_scene);
    auto& k = cam.rig.intrinsics;
    k = {quantize9(k.fx), quantize9(k.fy), quantize9(k.cx), quantize9(k.cy)};
    cam.rig.camera_from_ego = quantize(cam.rig.camera_from_ego);
  }
}

SceneGraph assemble(const SceneRecord& record, const ScenePlans& plans, std::span<const AssetMatch> matches,
                    std::span<const CameraSample> cameras, std::span<const BackgroundInstance> background,
                    const AssetCatalog& catalog, std::uint64_t seed, const AssembleConfig& cfg) {
  SceneGraph scene;
  scene.meta.seed = seed;
  scene.meta.origin = record.origin;
  scene.meta.scene_id = record.scene_id;

  auto require_asset = [&](const std::string& asset_id) -> const Asset& {
    const Asset* a = catalog.find(asset_id);
    if (!a) throw Error(Errc::DanglingAssetRef, "asset '" + asset_id + "' is not in the catalog");
    return *a;
  };
  auto next_id = [&]() { return static_cast<std::uint32_t>(scene.instances.size() + 1); };

  // annotated objects
  for (const auto& obj : record.objects) {
    auto it = std::find_if(matches.begin(), matches.end(), [&](const AssetMatch& m) { return m.object_id == obj.id; });
    if (it == matches.end()) throw Error(Errc::DanglingAssetRef, "object '" + obj.id + "' has no asset match");
    const Asset& asset = require_asset(it->asset_id);
    SceneInstance inst;
    inst.id = next_id();
    inst.asset_id = asset.asset_id;
    inst.cls = obj.category;
    inst.scale = it->scale;
    inst.size = asset.bbox_dims * it->scale;
    const double bottom = obj.center.z() - obj.size.z() / 2.0;
    inst.pose = RigidTransform::from_yaw(obj.yaw, Vec3(obj.center.x(), obj.center.y(), bottom + inst.size.z() / 2.0));
    inst.source = obj.id;
    scene.instances.push_back(std::move(inst));
  }

  // buildings
  const auto building_assets = catalog.by_category(kBuildingCategory);
  for (const auto& plan : plans.buildings) {
    const auto* rect = std::get_if<RectReplace>(&plan.classification);
    if (rect && !building_assets.empty()) {
      const BuildingFit fit = fit_building(*rect, plan.height, building_assets);
      SceneInstance inst;
      inst.id = next_id();
      inst.asset_id = fit.asset->asset_id;
      inst.cls = Class20::Building;
      inst.scale = fit.scale;
      inst.size = fit.asset->bbox_dims * fit.scale;
      inst.pose = RigidTransform::from_yaw(rect->yaw, Vec3(rect->center.x(), rect->center.y(), inst.size.z() / 2.0));
      inst.source = "building/" + std::to_string(plan.source_id);
      scene.instances.push_back(std::move(inst));
    } else {
      scene.meshes.push_back({"building_" + std::to_string(plan.source_id), Class20::Building, SurfaceRole::Facade,
                              extrude_building(plan)});
    }
  }

  // background
  std::size_t vegetation_n = 0, roadside_n = 0;
  for (const auto& bg : background) {
    const Asset& asset = require_asset(bg.asset_id);
    SceneInstance inst;
    inst.id = next_id();
    inst.asset_id = asset.asset_id;
    inst.cls = asset.render_class();
    inst.scale = bg.scale;
    inst.size = asset.bbox_dims * bg.scale;
    inst.pose = RigidTransform::from_yaw(bg.yaw, Vec3(bg.position.x(), bg.position.y(), bg.position.z() + inst.size.z() / 2.0));
    const bool vegetation = bg.kind == BackgroundKind::Tree || bg.kind == BackgroundKind::Bush;
    inst.source = vegetation ? "vegetation/" + std::to_string(vegetation_n++) : "roadside/" + std::to_string(roadside_n++);
    scene.instances.push_back(std::move(inst));
  }

  // surfaces
  if (!plans.roads.joint_mesh.empty()) {
    scene.meshes.push_back({"road_network", Class20::Road, SurfaceRole::Road, plans.roads.joint_mesh});
  }
  TriangleMesh sidewalks;
  for (const auto& line : plans.sidewalks) {
    TriangleMesh ribbon = ribbon_mesh(line.points, cfg.sidewalk_width, cfg.sidewalk_z);
    // sidewalk pieces crossing a carriageway (at junctions) are dropped
    std::erase_if(ribbon.triangles, [&](const Triangle& t) {
      const Vec3 c = (ribbon.vertices[t[0]] + ribbon.vertices[t[1]] + ribbon.vertices[t[2]]) / 3.0;
      return inside_any_road(c.head<2>(), plans.roads.plans);
    });
    sidewalks.append(ribbon);
  }
  if (!sidewalks.empty()) scene.meshes.push_back({"sidewalks", Class20::Sidewalk, SurfaceRole::Sidewalk, sidewalks});

  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  auto grow = [&](const Vec3& p) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  };
  for (const auto& m : scene.meshes) {
    for (const auto& v : m.mesh.vertices) grow(v);
  }
  for (const auto& inst : scene.instances) grow(inst.pose.translation);
  for (const auto& cam : cameras) grow(cam.position());
  for (const auto& pose : record.ego_poses) grow(pose.scene_from_ego.translation);
  if (!std::isfinite(lo.x())) lo = hi = Vec2::Zero();
  lo -= Vec2::Constant(cfg.ground_margin);
  hi += Vec2::Constant(cfg.ground_margin);
  TriangleMesh ground;
  ground.vertices = {Vec3(lo.x(), lo.y(), cfg.ground_z), Vec3(hi.x(), lo.y(), cfg.ground_z),
                     Vec3(hi.x(), hi.y(), cfg.ground_z), Vec3(lo.x(), hi.y(), cfg.ground_z)};
  ground.triangles = {{0, 1, 2}, {0, 2, 3}};
  scene.meshes.push_back({"ground", Class20::Ground, SurfaceRole::Terrain, ground});

  // cameras
  for (const auto& cam : cameras) {
    if (!(cam.position().z() > 0.0)) {
      throw Error(Errc::CameraBelowGround, "camera '" + cam.rig.name + "' is at or below the ground plane");
    }
    scene.cameras.push_back(cam);
  }

  // lighting and materials
  if (catalog.hdris.empty()) throw Error(Errc::DanglingAssetRef, "catalog lists no HDRI");
  {
    Rng rng = Rng::stream(seed, "hdri");
    scene.hdri_id = catalog.hdris[rng.index(catalog.hdris.size())];
  }
  for (auto role : kSurfaceRoles) {
    std::vector<const Material*> pool;
    for (const auto& m : catalog.materials) {
      if (m.role == role) pool.push_back(&m);
    }
    if (pool.empty()) throw Error(Errc::DanglingAssetRef, std::string("catalog has no ") + role_key(role) + " material");
    Rng rng = Rng::stream(seed, std::string("material/") + role_key(role));
    scene.materials[role_key(role)] = pool[rng.index(pool.size())]->material_id;
  }

  canonicalize(scene);
  return scene;
}

std::map<std::string, TriangleMesh> load_instance_meshes(const SceneGraph& scene, const AssetCatalog& catalog) {
  std::map<std::string, TriangleMesh> out;
  for (const auto& inst : scene.instances) {
    if (out.count(inst.asset_id)) continue;
    const Asset* a = catalog.find(inst.asset_id);
    if (!a) throw Error(Errc::DanglingAssetRef, "asset '" + inst.asset_id + "' is not in the catalog");
    out.emplace(inst.asset_id, read_obj(catalog.mesh_path(*a)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

json vec3_json(const Vec3& v) { return json::array({quantize9(v.x()), quantize9(v.y()), quantize9(v.z())}); }

json transform_json(const RigidTransform& t) {
  const RigidTransform q = quantize(t);
  return json{{"rotation", json::array({q.rotation.w(), q.rotation.x(), q.rotation.y(), q.rotation.z()})},
              {"translation", vec3_json(q.translation)}};
}

[[noreturn]] void corrupt(const std::string& why) { throw Error(Errc::CorruptStream, "scene stream: " + why); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) corrupt("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

RigidTransform transform_from(const json& j) {
  const json& r = j.at("rotation");
  if (!r.is_array() || r.size() != 4) corrupt("expected a quaternion");
  return {Quat(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()),
          vec3_from(j.at("translation"))};
}

Class20 class_from(const json& j) {
  auto c = ClassTaxonomy::standard().find20(j.get<std::string>());
  if (!c) corrupt("unknown class '" + j.get<std::string>() + "'");
  return *c;
}

json class_json(Class20 c) { return std::string(ClassTaxonomy::standard().name(c)); }

json rig_json(const CameraRig& rig) {
  const auto& k = rig.intrinsics;
  return json{{"name", rig.name},
              {"intrinsics", {{"fx", quantize9(k.fx)}, {"fy", quantize9(k.fy)}, {"cx", quantize9(k.cx)}, {"cy", quantize9(k.cy)}}},
              {"width", rig.width},
              {"height", rig.height},
              {"camera_from_ego", transform_json(rig.camera_from_ego)}};
}

CameraRig rig_from(const json& j) {
  CameraRig rig;
  rig.name = j.at("name").get<std::string>();
  const json& k = j.at("intrinsics");
  rig.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(), k.at("cy").get<double>()};
  rig.width = j.at("width").get<int>();
  rig.height = j.at("height").get<int>();
  rig.camera_from_ego = transform_from(j.at("camera_from_ego"));
  return rig;
}

}  // namespace

std::string serialize_scene(const SceneGraph& scene) {
  json j;
  j["schema"] = std::string(kSceneSchema);
  j["meta"] = {{"seed", scene.meta.seed},
               {"scene_id", scene.meta.scene_id},
               {"geo_origin",
                {{"lat", quantize9(scene.meta.origin.lat)},
                 {"lon", quantize9(scene.meta.origin.lon)},
                 {"alt", quantize9(scene.meta.origin.alt)}}}};
  json instances = json::array();
  for (const auto& inst : scene.instances) {
    instances.push_back({{"id", inst.id},
                         {"asset_id", inst.asset_id},
                         {"class", class_json(inst.cls)},
                         {"pose", transform_json(inst.pose)},
                         {"scale", quantize9(inst.scale)},
                         {"size", vec3_json(inst.size)},
                         {"source", inst.source}});
  }
  j["instances"] = std::move(instances);
  json meshes = json::array();
  for (const auto& m : scene.meshes) {
    json verts = json::array();
    for (const auto& v : m.mesh.vertices) {
      verts.push_back(quantize9(v.x()));
      verts.push_back(quantize9(v.y()));
      verts.push_back(quantize9(v.z()));
    }
    json tris = json::array();
    for (const auto& t : m.mesh.triangles) {
      tris.push_back(t[0]);
      tris.push_back(t[1]);
      tris.push_back(t[2]);
    }
    meshes.push_back({{"name", m.name},
                      {"class", class_json(m.cls)},
                      {"role", role_key(m.role)},
                      {"vertices", std::move(verts)},
                      {"triangles", std::move(tris)}});
  }
  j["meshes"] = std::move(meshes);
  json cams = json::array();
  for (const auto& cam : scene.cameras) {
    json source;
    if (const auto* e = std::get_if<EgoClone>(&cam.source)) {
      source = {{"kind", "ego"}, {"timestamp", e->timestamp}};
    } else {
      source = {{"kind", "vehicle"}, {"object_id", std::get<VehicleMount>(cam.source).object_id}};
    }
    cams.push_back({{"camera_from_scene", transform_json(cam.camera_from_scene)},
                    {"rig", rig_json(cam.rig)},
                    {"source", std::move(source)}});
  }
  j["cameras"] = std::move(cams);
  j["hdri"] = scene.hdri_id;
  j["materials"] = scene.materials;
  return j.dump(1) + "\n";
}

SceneGraph deserialize_scene(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    corrupt(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) corrupt("missing schema");
  const std::string schema = j["schema"].get<std::string>();
  if (schema != kSceneSchema) {
    throw Error(Errc::SchemaVersionMismatch, "scene schema '" + schema + "' (expected '" + std::string(kSceneSchema) + "')");
  }
  SceneGraph s;
  try {
    const json& meta = j.at("meta");
    s.meta.schema = schema;
    s.meta.seed = meta.at("seed").get<std::uint64_t>();
    s.meta.scene_id = meta.at("scene_id").get<std::string>();
    const json& o = meta.at("geo_origin");
    s.meta.origin = {o.at("lat").get<double>(), o.at("lon").get<double>(), o.at("alt").get<double>()};
    for (const json& ji : j.at("instances")) {
      SceneInstance inst;
      inst.id = ji.at("id").get<std::uint32_t>();
      inst.asset_id = ji.at("asset_id").get<std::string>();
      inst.cls = class_from(ji.at("class"));
      inst.pose = transform_from(ji.at("pose"));
      inst.scale = ji.at("scale").get<double>();
      inst.size = vec3_from(ji.at("size"));
      inst.source = ji.at("source").get<std::string>();
      if (inst.id != s.instances.size() + 1) corrupt("instance ids are not dense from 1");
      s.instances.push_back(std::move(inst));
    }
    for (const json& jm : j.at("meshes")) {
      SceneMesh m;
      m.name = jm.at("name").get<std::string>();
      m.cls = class_from(jm.at("class"));
      auto role = parse_role(jm.at("role").get<std::string>());
      if (!role) corrupt("unknown surface role");
      m.role = *role;
      const json& v = jm.at("vertices");
      const json& t = jm.at("triangles");
      if (v.size() % 3 != 0 || t.size() % 3 != 0) corrupt("mesh arrays are not multiples of 3");
      for (std::size_t i = 0; i < v.size(); i += 3) {
        m.mesh.vertices.emplace_back(v[i].get<double>(), v[i + 1].get<double>(), v[i + 2].get<double>());
      }
      for (std::size_t i = 0; i < t.size(); i += 3) {
        Triangle tri{t[i].get<std::uint32_t>(), t[i + 1].get<std::uint32_t>(), t[i + 2].get<std::uint32_t>()};
        for (auto idx : tri) {
          if (idx >= m.mesh.vertices.size()) corrupt("triangle index out of range in mesh '" + m.name + "'");
        }
        m.mesh.triangles.push_back(tri);
      }
      s.meshes.push_back(std::move(m));
    }
    for (const json& jc : j.at("cameras")) {
      CameraSample cam;
      cam.camera_from_scene = transform_from(jc.at("camera_from_scene"));
      cam.rig = rig_from(jc.at("rig"));
      const json& src = jc.at("source");
      const std::string kind = src.at("kind").get<std::string>();
      if (kind == "ego") {
        cam.source = EgoClone{src.at("timestamp").get<std::int64_t>()};
      } else if (kind == "vehicle") {
        cam.source = VehicleMount{src.at("object_id").get<std::string>()};
      } else {
        corrupt("unknown camera source '" + kind + "'");
      }
      s.cameras.push_back(std::move(cam));
    }
    s.hdri_id = j.at("hdri").get<std::string>();
    s.materials = j.at("materials").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  return s;
}

}  // namespace trove
