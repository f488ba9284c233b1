#include "trove/placement.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "trove/rng.hpp"

namespace trove {

double fit_scale(const Vec3& query_dims, const Vec3& asset_dims) {
  return query_dims.maxCoeff() / asset_dims.maxCoeff();
}

double iou3d(const ObjectBox& query, const Vec3& asset_dims) {
  const Vec3 scaled = asset_dims * fit_scale(query.size, asset_dims);
  const Vec2 c = query.center.head<2>();
  const OrientedBox2 q{c, query.size.head<2>() / 2.0, query.yaw};
  const OrientedBox2 a{c, scaled.head<2>() / 2.0, query.yaw};
  return iou_xy(q, a) * std::min(query.size.z(), scaled.z());
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

CategoryCompat CategoryCompat::defaults() {
  CategoryCompat c;
  const auto& tax = ClassTaxonomy::standard();
  for (std::size_t i = 0; i < kNumClasses20; ++i) {
    c.table_[static_cast<Class20>(i)] = {tax.names20()[i]};
  }
  c.table_[Class20::Car] = {"car", "jeep"};
  return c;
}

CategoryCompat CategoryCompat::parse(std::string_view text) {
  CategoryCompat c = defaults();
  const auto& tax = ClassTaxonomy::standard();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    const std::string where = "category compat line " + std::to_string(lineno);
    if (colon == std::string::npos) throw Error(Errc::ConfigError, where + ": expected '<class>: <categories>'");
    auto cls = tax.find20(trim(line.substr(0, colon)));
    if (!cls) throw Error(Errc::ConfigError, where + ": unknown class");
    std::vector<std::string> cats;
    std::istringstream rest(line.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      if (item != kPoleCategory) {
        auto cc = tax.find20(item);
        if (!cc) throw Error(Errc::ConfigError, where + ": unknown category '" + item + "'");
        item = tax.name(*cc);
      }
      cats.push_back(item);
    }
    if (cats.empty()) throw Error(Errc::ConfigError, where + ": empty category list");
    c.table_[*cls] = std::move(cats);
  }
  return c;
}

const std::vector<std::string>& CategoryCompat::categories(Class20 c) const { return table_.at(c); }

std::string CategoryCompat::to_text() const {
  std::string out;
  const auto& tax = ClassTaxonomy::standard();
  for (const auto& [cls, cats] : table_) {
    out += std::string(tax.name(cls)) + ":";
    for (std::size_t i = 0; i < cats.size(); ++i) out += (i ? ", " : " ") + cats[i];
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

AssetMatch match_asset(const ObjectBox& object, const AssetCatalog& catalog, int k, std::uint64_t seed,
                       const CategoryCompat& compat) {
  if (k < 1) throw Error(Errc::DegenerateInput, "top-k needs k >= 1");
  struct Candidate {
    const Asset* asset;
    double score;
  };
  std::vector<Candidate> cands;
  for (const auto& cat : compat.categories(object.category)) {
    for (const Asset* a : catalog.by_category(cat)) cands.push_back({a, iou3d(object, a->bbox_dims)});
  }
  if (cands.empty()) {
    throw Error(Errc::NoAssetForCategory,
                "no asset for category '" + std::string(ClassTaxonomy::standard().name(object.category)) +
                    "' (object " + object.id + ")");
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.asset->asset_id < b.asset->asset_id;
  });
  std::size_t pick = 0;
  if (k > 1) {
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(k), cands.size());
    Rng rng = Rng::stream(seed, "match/" + object.id);
    pick = static_cast<std::size_t>(rng.index(top));
  }
  const Asset& a = *cands[pick].asset;
  return {object.id, a.asset_id, fit_scale(object.size, a.bbox_dims), cands[pick].score,
          static_cast<int>(pick) + 1};
}

std::vector<AssetMatch> match_assets(std::span<const ObjectBox> objects, const AssetCatalog& catalog, int k,
                                     std::uint64_t seed, const CategoryCompat& compat) {
  std::vector<AssetMatch> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(match_asset(o, catalog, k, seed, compat));
  return out;
}

// ---------------------------------------------------------------------------

RigidTransform vehicle_mount_pose(const ObjectBox& vehicle, const CameraRig& rig, const CameraSamplingConfig& cfg) {
  const Vec3 ground(vehicle.center.x(), vehicle.center.y(), vehicle.center.z() - vehicle.size.z() / 2.0);
  const RigidTransform scene_from_vehicle = RigidTransform::from_yaw(vehicle.yaw, ground);
  RigidTransform vehicle_from_camera = rig.camera_from_ego.inverse();
  vehicle_from_camera.translation.z() = std::max(vehicle_from_camera.translation.z(), cfg.min_mount_height);
  return (scene_from_vehicle * vehicle_from_camera).inverse();
}

std::vector<CameraSample> sample_cameras(const SceneRecord& scene, int n, std::uint64_t seed,
                                         const CameraSamplingConfig& cfg) {
  if (scene.cameras.empty()) throw Error(Errc::NoCameraRig, "scene '" + scene.scene_id + "' has no camera rig");
  if (scene.ego_poses.empty()) throw Error(Errc::EmptyScene, "scene '" + scene.scene_id + "' has no ego poses");
  if (n < 1) throw Error(Errc::DegenerateInput, "camera count must be >= 1");

  const CameraRig& rig = scene.cameras.front();
  auto ego_camera = [&](const EgoPose& pose, const CameraRig& r) {
    return CameraSample{r.camera_from_ego * pose.scene_from_ego.inverse(), r, EgoClone{pose.timestamp}};
  };
  auto above_ground = [&](const CameraSample& s) { return s.position().z() > cfg.min_camera_z; };

  // reference pose: closest to the annotated snapshot
  std::size_t ref = 0;
  if (!scene.objects.empty()) {
    const auto t = scene.objects.front().timestamp;
    for (std::size_t i = 1; i < scene.ego_poses.size(); ++i) {
      if (std::llabs(scene.ego_poses[i].timestamp - t) < std::llabs(scene.ego_poses[ref].timestamp - t)) ref = i;
    }
  }
  std::vector<CameraSample> out;
  out.push_back(ego_camera(scene.ego_poses[ref], rig));
  if (!above_ground(out.front())) {
    throw Error(Errc::CameraBelowGround, "ego camera of scene '" + scene.scene_id + "' is below ground");
  }

  Rng rng = Rng::stream(seed, "cameras/" + scene.scene_id);
  auto draw_without_replacement = [&](std::size_t count, std::size_t want) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    const std::size_t m = std::min(count, want);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(count - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
  };

  std::vector<const ObjectBox*> vehicles;
  std::set<std::string> seen;
  for (const auto& o : scene.objects) {
    if (is_vehicle(o.category) && seen.insert(o.id).second) vehicles.push_back(&o);
  }
  const auto want = static_cast<std::size_t>(n - 1);
  for (auto i : draw_without_replacement(vehicles.size(), want)) {
    CameraSample s{vehicle_mount_pose(*vehicles[i], rig, cfg), rig, VehicleMount{vehicles[i]->id}};
    if (above_ground(s)) out.push_back(std::move(s));
  }

  // fall back to other ego poses, then to other rigs at those poses
  if (out.size() < static_cast<std::size_t>(n)) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;  // (pose, rig)
    for (std::size_t r = 0; r < scene.cameras.size(); ++r) {
      std::vector<std::size_t> poses;
      for (std::size_t p = 0; p < scene.ego_poses.size(); ++p) {
        if (r == 0 && p == ref) continue;
        poses.push_back(p);
      }
      for (auto k : draw_without_replacement(poses.size(), poses.size())) slots.emplace_back(poses[k], r);
    }
    std::size_t cursor = 0;
    std::size_t misses = 0;
    while (out.size() < static_cast<std::size_t>(n) && !slots.empty() && misses < slots.size()) {
      const auto [p, r] = slots[cursor % slots.size()];
      ++cursor;
      auto s = ego_camera(scene.ego_poses[p], scene.cameras[r]);
      if (above_ground(s)) {
        out.push_back(std::move(s));
        misses = 0;
      } else {
        ++misses;
      }
    }
    // a single-pose, single-rig scene repeats the ego clone
    while (out.size() < static_cast<std::size_t>(n)) out.push_back(out.front());
  }
  return out;
}

}  // namespace trove
