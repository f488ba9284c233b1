#include "trove/nuscenes.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <unordered_map>

#include "trove/error.hpp"

namespace trove {

using nlohmann::json;

namespace {

struct Table {
  std::vector<json> rows;
  std::unordered_map<std::string, std::size_t> by_token;

  const json& at(const std::string& token, std::string_view table) const {
    auto it = by_token.find(token);
    if (it == by_token.end()) {
      throw Error(Errc::SchemaViolation, "nuScenes " + std::string(table) + " has no token '" + token + "'");
    }
    return rows[it->second];
  }
};

Table load_table(const std::filesystem::path& dir, std::string_view name, bool required = true) {
  Table t;
  const auto path = dir / (std::string(name) + ".json");
  if (!required && !std::filesystem::exists(path)) return t;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(Errc::SchemaViolation, path.string() + ": expected an array");
  for (auto& row : j) {
    if (!row.is_object() || !row.contains("token") || !row["token"].is_string()) {
      throw Error(Errc::SchemaViolation, path.string() + ": row without a token");
    }
    t.by_token.emplace(row["token"].get<std::string>(), t.rows.size());
    t.rows.push_back(std::move(row));
  }
  return t;
}

template <class T>
T field(const json& row, const char* key, std::string_view table) {
  try {
    return row.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::SchemaViolation, "nuScenes " + std::string(table) + ": bad or missing field '" + key + "'");
  }
}

RigidTransform pose_of(const json& row, std::string_view table) {
  const auto t = field<std::vector<double>>(row, "translation", table);
  const auto r = field<std::vector<double>>(row, "rotation", table);
  if (t.size() != 3 || r.size() != 4) throw Error(Errc::SchemaViolation, "nuScenes " + std::string(table) + ": bad pose");
  return {Quat(r[0], r[1], r[2], r[3]).normalized(), Vec3(t[0], t[1], t[2])};
}

// nuScenes lidarseg classes not covered by the box categories.
std::optional<Class20> map_lidarseg_category(std::string_view name) {
  if (auto c = map_nuscenes_category(name)) return c;
  if (name == "flat.driveable_surface") return Class20::Road;
  if (name == "flat.sidewalk") return Class20::Sidewalk;
  if (name == "flat.terrain" || name == "flat.other") return Class20::Ground;
  if (name == "static.manmade") return Class20::Building;
  if (name == "static.vegetation") return Class20::Trees;
  return std::nullopt;
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::MissingFile, "cannot open '" + p.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

std::optional<Class20> map_nuscenes_category(std::string_view c) {
  auto starts = [&](std::string_view p) { return c.substr(0, p.size()) == p; };
  if (c == "vehicle.car" || c == "vehicle.emergency.police") return Class20::Car;
  if (starts("vehicle.bus")) return Class20::Bus;
  if (c == "vehicle.truck" || c == "vehicle.trailer") return Class20::Truck;
  if (c == "vehicle.construction") return Class20::Construction;
  if (c == "vehicle.emergency.ambulance") return Class20::Van;
  if (c == "vehicle.bicycle") return Class20::CycleRider;
  if (c == "vehicle.motorcycle") return Class20::MotorcycleRider;
  if (starts("human.pedestrian")) return Class20::Human;
  if (c == "movable_object.trafficcone") return Class20::TrafficCone;
  if (c == "movable_object.barrier") return Class20::Barrier;
  return std::nullopt;
}

std::optional<GeoOrigin> nuscenes_map_origin(std::string_view location) {
  if (location == "boston-seaport") return GeoOrigin{42.336849169438615, -71.05785369873047, 0.0};
  if (location == "singapore-onenorth") return GeoOrigin{1.2882100868743724, 103.78475189208984, 0.0};
  if (location == "singapore-hollandvillage") return GeoOrigin{1.2993652317780957, 103.78217697143555, 0.0};
  if (location == "singapore-queenstown") return GeoOrigin{1.2782562240223188, 103.76741409301758, 0.0};
  return std::nullopt;
}

SceneRecord convert_nuscenes_scene(const std::filesystem::path& dataroot, const std::string& scene_name,
                                   const std::filesystem::path& out_root, const NuScenesOptions& opts) {
  const auto dir = dataroot / opts.version;
  const Table scenes = load_table(dir, "scene");
  const Table logs = load_table(dir, "log");
  const Table samples = load_table(dir, "sample");
  const Table sample_data = load_table(dir, "sample_data");
  const Table sensors = load_table(dir, "sensor");
  const Table calibrated = load_table(dir, "calibrated_sensor");
  const Table ego_poses = load_table(dir, "ego_pose");
  const Table annotations = load_table(dir, "sample_annotation");
  const Table instances = load_table(dir, "instance");
  const Table categories = load_table(dir, "category");
  const Table lidarseg = load_table(dir, "lidarseg", false);

  const json* scene = nullptr;
  for (const auto& s : scenes.rows) {
    if (field<std::string>(s, "name", "scene") == scene_name) scene = &s;
  }
  if (!scene) throw Error(Errc::SchemaViolation, "nuScenes scene '" + scene_name + "' not found");
  const json& log = logs.at(field<std::string>(*scene, "log_token", "scene"), "log");
  const std::string location = field<std::string>(log, "location", "log");
  const auto map_origin = nuscenes_map_origin(location);
  if (!map_origin) throw Error(Errc::SchemaViolation, "unknown nuScenes map location '" + location + "'");

  // keyframes in order
  std::vector<const json*> keyframes;
  for (std::string tok = field<std::string>(*scene, "first_sample_token", "scene"); !tok.empty();) {
    const json& s = samples.at(tok, "sample");
    keyframes.push_back(&s);
    tok = s.contains("next") && s["next"].is_string() ? s["next"].get<std::string>() : "";
  }
  if (keyframes.empty()) throw Error(Errc::EmptyScene, "nuScenes scene '" + scene_name + "' has no samples");
  if (opts.keyframe >= keyframes.size()) throw Error(Errc::SchemaViolation, "keyframe index out of range");

  std::unordered_map<std::string, std::vector<const json*>> data_of_sample;
  for (const auto& d : sample_data.rows) {
    if (d.contains("is_key_frame") && d["is_key_frame"].is_boolean() && !d["is_key_frame"].get<bool>()) continue;
    data_of_sample[field<std::string>(d, "sample_token", "sample_data")].push_back(&d);
  }
  auto channel_of = [&](const json& d) -> std::pair<std::string, std::string> {
    const json& cs = calibrated.at(field<std::string>(d, "calibrated_sensor_token", "sample_data"), "calibrated_sensor");
    const json& sensor = sensors.at(field<std::string>(cs, "sensor_token", "calibrated_sensor"), "sensor");
    return {field<std::string>(sensor, "channel", "sensor"), field<std::string>(sensor, "modality", "sensor")};
  };
  auto lidar_of = [&](const json& sample) -> const json* {
    for (const json* d : data_of_sample[field<std::string>(sample, "token", "sample")]) {
      if (channel_of(*d).first == "LIDAR_TOP") return d;
    }
    return nullptr;
  };

  SceneRecord rec;
  rec.scene_id = scene_name;
  rec.directory = out_root / scene_name;
  rec.osm_file = opts.osm_file;

  // scene frame: global shifted to the first ego position
  const json* first_lidar = lidar_of(*keyframes.front());
  if (!first_lidar) throw Error(Errc::SchemaViolation, "first keyframe has no LIDAR_TOP data");
  const RigidTransform first_ego = pose_of(ego_poses.at(field<std::string>(*first_lidar, "ego_pose_token", "sample_data"), "ego_pose"), "ego_pose");
  const Vec3 offset(first_ego.translation.x(), first_ego.translation.y(), 0.0);
  const auto [lat, lon] = local_to_geo(*map_origin, offset.head<2>());
  rec.origin = {lat, lon, 0.0};
  const RigidTransform scene_from_global{Quat::Identity(), -offset};

  std::map<std::int64_t, std::string> category_by_index;
  for (const auto& c : categories.rows) {
    if (c.contains("index") && c["index"].is_number_integer()) {
      category_by_index[c["index"].get<std::int64_t>()] = field<std::string>(c, "name", "category");
    }
  }
  std::unordered_map<std::string, std::string> lidarseg_file;
  for (const auto& l : lidarseg.rows) {
    lidarseg_file[field<std::string>(l, "sample_data_token", "lidarseg")] = field<std::string>(l, "filename", "lidarseg");
  }

  for (const json* kf : keyframes) {
    const json* lidar = lidar_of(*kf);
    if (!lidar) continue;
    const std::int64_t ts = field<std::int64_t>(*kf, "timestamp", "sample");
    const RigidTransform global_from_ego =
        pose_of(ego_poses.at(field<std::string>(*lidar, "ego_pose_token", "sample_data"), "ego_pose"), "ego_pose");
    rec.ego_poses.push_back({ts, scene_from_global * global_from_ego});

    if (!opts.convert_lidar) continue;
    const auto pcd = read_bytes(dataroot / field<std::string>(*lidar, "filename", "sample_data"));
    constexpr std::size_t kStride = 5 * sizeof(float);
    if (pcd.size() % kStride != 0) throw Error(Errc::TruncatedRecord, "nuScenes point cloud size is not a multiple of 20");
    const std::size_t n = pcd.size() / kStride;
    std::vector<char> labels;
    const std::string token = field<std::string>(*lidar, "token", "sample_data");
    if (auto it = lidarseg_file.find(token); it != lidarseg_file.end()) {
      labels = read_bytes(dataroot / it->second);
      if (labels.size() != n) throw Error(Errc::TruncatedRecord, "lidarseg label count does not match the point count");
    }
    const RigidTransform ego_from_sensor = pose_of(calibrated.at(field<std::string>(*lidar, "calibrated_sensor_token", "sample_data"), "calibrated_sensor"), "calibrated_sensor");
    const RigidTransform scene_from_sensor = scene_from_global * global_from_ego * ego_from_sensor;
    LidarSweep sweep;
    sweep.timestamp = ts;
    sweep.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      float xyz[3];
      std::memcpy(xyz, pcd.data() + i * kStride, sizeof xyz);
      const Vec3 p = scene_from_sensor.apply(Vec3(xyz[0], xyz[1], xyz[2]));
      LidarPoint lp{static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), -1};
      if (!labels.empty()) {
        auto it = category_by_index.find(static_cast<unsigned char>(labels[i]));
        const auto cls = it == category_by_index.end() ? std::nullopt : map_lidarseg_category(it->second);
        lp.label = static_cast<std::int8_t>(cls ? *cls : Class20::Void);
      }
      sweep.points.push_back(lp);
    }
    const std::string rel = "lidar/" + token + ".bin";
    const auto bytes = serialize_lidar(sweep);
    std::filesystem::create_directories(rec.directory / "lidar");
    std::ofstream f(rec.directory / rel, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(Errc::IoError, "cannot write '" + (rec.directory / rel).string() + "'");
    rec.sweep_refs.push_back({rel, ts});
    rec.sweeps.push_back(std::move(sweep));
  }

  // cameras of the reference keyframe
  const json& ref = *keyframes[opts.keyframe];
  for (const json* d : data_of_sample[field<std::string>(ref, "token", "sample")]) {
    const auto [channel, modality] = channel_of(*d);
    if (modality != "camera") continue;
    const json& cs = calibrated.at(field<std::string>(*d, "calibrated_sensor_token", "sample_data"), "calibrated_sensor");
    const auto k = field<std::vector<std::vector<double>>>(cs, "camera_intrinsic", "calibrated_sensor");
    if (k.size() != 3 || k[0].size() != 3 || k[1].size() != 3) throw Error(Errc::SchemaViolation, "bad camera_intrinsic");
    CameraRig rig;
    rig.name = channel;
    rig.intrinsics = {k[0][0], k[1][1], k[0][2], k[1][2]};
    rig.width = d->contains("width") ? field<int>(*d, "width", "sample_data") : 1600;
    rig.height = d->contains("height") ? field<int>(*d, "height", "sample_data") : 900;
    rig.camera_from_ego = pose_of(cs, "calibrated_sensor").inverse();
    rec.cameras.push_back(rig);
  }
  std::sort(rec.cameras.begin(), rec.cameras.end(), [](const CameraRig& a, const CameraRig& b) { return a.name < b.name; });

  // annotations of the reference keyframe
  const std::string ref_token = field<std::string>(ref, "token", "sample");
  const std::int64_t ref_ts = field<std::int64_t>(ref, "timestamp", "sample");
  std::size_t skipped = 0;
  for (const auto& a : annotations.rows) {
    if (field<std::string>(a, "sample_token", "sample_annotation") != ref_token) continue;
    const json& inst = instances.at(field<std::string>(a, "instance_token", "sample_annotation"), "instance");
    const json& cat = categories.at(field<std::string>(inst, "category_token", "instance"), "category");
    const auto cls = map_nuscenes_category(field<std::string>(cat, "name", "category"));
    if (!cls) {
      ++skipped;
      continue;
    }
    const RigidTransform global_from_box = pose_of(a, "sample_annotation");
    const auto size = field<std::vector<double>>(a, "size", "sample_annotation");
    if (size.size() != 3) throw Error(Errc::SchemaViolation, "bad annotation size");
    ObjectBox box;
    box.id = field<std::string>(inst, "token", "instance");
    box.category = *cls;
    box.center = (scene_from_global * global_from_box).translation;
    box.size = Vec3(size[1], size[0], size[2]);  // nuScenes stores (width, length, height)
    const Quat& q = global_from_box.rotation;
    box.yaw = quaternion_to_yaw(q.w(), q.x(), q.y(), q.z());
    box.timestamp = ref_ts;
    rec.objects.push_back(box);
  }
  std::sort(rec.objects.begin(), rec.objects.end(), [](const ObjectBox& a, const ObjectBox& b) { return a.id < b.id; });
  if (skipped) {
    rec.warnings.push_back({Errc::SchemaViolation, std::to_string(skipped) + " annotations with unmapped categories skipped"});
  }

  write_text_file(rec.directory / "scene.json", serialize_scene_record(rec));
  return rec;
}

}  // namespace trove
