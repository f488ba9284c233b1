#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixture.hpp"
#include "test_support.hpp"
#include "trove/error.hpp"
#include "trove/placement.hpp"

namespace trove {
namespace {

ObjectBox box(const Vec3& size, double yaw = 0.0, const Vec3& center = Vec3(0, 0, 1)) {
  ObjectBox o;
  o.id = "q";
  o.category = Class20::Car;
  o.size = size;
  o.yaw = yaw;
  o.center = center;
  return o;
}

AssetCatalog catalog_of(const std::vector<std::pair<std::string, Vec3>>& cars) {
  AssetCatalog c;
  for (const auto& [id, dims] : cars) c.assets.push_back({id, "car", dims, id + ".obj"});
  return c;
}

// Footprint IoU from sampling, times the smaller height.
double iou3d_oracle(const ObjectBox& q, const Vec3& asset, Rng& rng) {
  const Vec3 scaled = asset * fit_scale(q.size, asset);
  const OrientedBox2 a{q.center.head<2>(), q.size.head<2>() / 2, q.yaw};
  const OrientedBox2 b{q.center.head<2>(), scaled.head<2>() / 2, q.yaw};
  return test::monte_carlo_iou(a, b, 400000, rng) * std::min(q.size.z(), scaled.z());
}

TEST(FitScale, Examples) {
  EXPECT_DOUBLE_EQ(fit_scale({4, 2, 1.5}, {2, 1, 1}), 2.0);
  EXPECT_DOUBLE_EQ(fit_scale({4, 2, 1.5}, {4, 2, 1.5}), 1.0);
  EXPECT_DOUBLE_EQ(fit_scale({1, 1, 1}, {10, 1, 1}), 0.1);
}

TEST(Iou3d, HandComputedExamples) {
  Rng rng(1);
  const auto q = box({4, 2, 1.5});
  EXPECT_NEAR(iou3d(q, {2, 1, 1}), 1.5, 1e-12);
  EXPECT_NEAR(iou3d(q, {2, 2, 1}), 0.75, 1e-12);
  EXPECT_NEAR(iou3d(q, {4, 2, 1.5}), 1.5, 1e-12);
  EXPECT_NEAR(iou3d_oracle(q, {2, 1, 1}, rng), 1.5, 0.02);
  EXPECT_NEAR(iou3d_oracle(q, {2, 2, 1}, rng), 0.75, 0.02);
}

TEST(Iou3d, RigidMotionInvariance) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 dims(rng.uniform(1, 6), rng.uniform(1, 3), rng.uniform(1, 3));
    const Vec3 asset(rng.uniform(1, 6), rng.uniform(1, 3), rng.uniform(1, 3));
    const double s0 = iou3d(box(dims), asset);
    const auto moved = box(dims, rng.uniform(-kPi, kPi), Vec3(rng.uniform(-500, 500), rng.uniform(-500, 500), 3));
    EXPECT_NEAR(iou3d(moved, asset), s0, 1e-9);
  }
}

TEST(Iou3d, RankingInvariantUnderUniformScaling) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 q(rng.uniform(2, 6), rng.uniform(1, 3), rng.uniform(1, 3));
    std::vector<Vec3> assets;
    for (int k = 0; k < 5; ++k) assets.emplace_back(rng.uniform(2, 6), rng.uniform(1, 3), rng.uniform(1, 3));
    auto argmax = [&](double s) {
      int best = 0;
      double bv = -1;
      for (int k = 0; k < 5; ++k) {
        const double v = iou3d(box(q * s), assets[k] * s);
        if (v > bv) {
          bv = v;
          best = k;
        }
      }
      return best;
    };
    EXPECT_EQ(argmax(1.0), argmax(3.7));
  }
}

TEST(Match, HigherScorerWins) {
  const auto cat = catalog_of({{"wide", {2, 2, 1}}, {"fit", {2, 1, 1}}});
  const auto m = match_asset(box({4, 2, 1.5}), cat, 1, 0);
  EXPECT_EQ(m.asset_id, "fit");
  EXPECT_DOUBLE_EQ(m.scale, 2.0);
  EXPECT_DOUBLE_EQ(m.score, 1.5);
  EXPECT_EQ(m.rank, 1);
}

TEST(Match, DeterministicK1) {
  const auto rec = fixture::fixture_record();
  const auto cat = fixture::fixture_catalog();
  const auto first = match_assets(rec.objects, cat, 1, 9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(match_assets(rec.objects, cat, 1, 9), first);
}

TEST(Match, TopKUniformDraws) {
  const auto cat = catalog_of({{"a", {4, 2, 1.5}}, {"b", {4, 2, 1.5}}, {"c", {4, 2, 1.5}}, {"d", {1, 1, 1}}});
  std::map<std::string, int> counts;
  const int n = 10000;
  for (int s = 0; s < n; ++s) ++counts[match_asset(box({4, 2, 1.5}), cat, 3, static_cast<std::uint64_t>(s)).asset_id];
  EXPECT_EQ(counts.count("d"), 0u);
  for (const char* id : {"a", "b", "c"}) EXPECT_NEAR(counts[id] / static_cast<double>(n), 1.0 / 3.0, 0.02) << id;
}

TEST(Match, PureFunctionOfInputsNotOrder) {
  auto rec = fixture::fixture_record();
  const auto cat = fixture::fixture_catalog();
  const auto a = match_assets(rec.objects, cat, 2, 5);
  std::reverse(rec.objects.begin(), rec.objects.end());
  auto b = match_assets(rec.objects, cat, 2, 5);
  std::reverse(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(Match, NoAssetForCategory) {
  auto q = box({1, 1, 1});
  q.category = Class20::Bus;
  try {
    match_asset(q, catalog_of({{"a", {1, 1, 1}}}), 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoAssetForCategory);
  }
}

TEST(Match, CompatibilityTable) {
  AssetCatalog cat;
  cat.assets.push_back({"j", "jeep", {4, 2, 1.5}, "j.obj"});
  EXPECT_EQ(match_asset(box({4, 2, 1.5}), cat, 1, 0).asset_id, "j");  // default: cars take jeeps
  const auto strict = CategoryCompat::parse("car: car\n");
  EXPECT_THROW(match_asset(box({4, 2, 1.5}), cat, 1, 0, strict), Error);
  const auto shipped = CategoryCompat::parse(read_text_file(TROVE_DATA_DIR "/category_compat.txt"));
  EXPECT_EQ(shipped.to_text(), CategoryCompat::defaults().to_text());
  EXPECT_THROW(CategoryCompat::parse("car: spaceship\n"), Error);
}

SceneRecord scene_with_vehicles(int count) {
  SceneRecord s;
  s.scene_id = "v";
  CameraRig rig;
  rig.name = "CAM_FRONT";
  rig.intrinsics = {1000, 1000, 800, 450};
  rig.width = 1600;
  rig.height = 900;
  Mat3 axes;
  axes << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  rig.camera_from_ego = RigidTransform::from_matrix(axes, Vec3(1.5, 0, 1.6)).inverse();
  s.cameras.push_back(rig);
  for (int i = 0; i < 5; ++i) s.ego_poses.push_back({100 + i, RigidTransform::from_yaw(0, Vec3(i * 3.0, 0, 0))});
  for (int i = 0; i < count; ++i) {
    ObjectBox o;
    o.id = "veh" + std::to_string(i);
    o.category = Class20::Car;
    o.center = Vec3(i * 7.0, 4, 0.8);
    o.size = Vec3(4.5, 1.9, 1.6);
    o.yaw = 0.1 * i;
    o.timestamp = 100;
    s.objects.push_back(o);
  }
  return s;
}

TEST(Cameras, NoVehiclesFallsBackToEgoPoses) {
  const auto cams = sample_cameras(scene_with_vehicles(0), 3, 1);
  ASSERT_EQ(cams.size(), 3u);
  std::set<std::int64_t> stamps;
  for (const auto& c : cams) {
    const auto* e = std::get_if<EgoClone>(&c.source);
    ASSERT_NE(e, nullptr);
    stamps.insert(e->timestamp);
  }
  EXPECT_EQ(stamps.size(), 3u);
}

TEST(Cameras, TwentyFiveVehiclesTwentySamples) {
  const auto cams = sample_cameras(scene_with_vehicles(25), 20, 1);
  ASSERT_EQ(cams.size(), 20u);
  EXPECT_TRUE(std::holds_alternative<EgoClone>(cams[0].source));
  std::set<std::string> mounts;
  for (std::size_t i = 1; i < cams.size(); ++i) {
    const auto* m = std::get_if<VehicleMount>(&cams[i].source);
    ASSERT_NE(m, nullptr);
    mounts.insert(m->object_id);
  }
  EXPECT_EQ(mounts.size(), 19u);
  for (const auto& c : cams) EXPECT_LT(c.camera_from_scene.orthonormality_residual(), 1e-9);
}

TEST(Cameras, VehicleYawRotatesOpticalAxis) {
  const auto rec = scene_with_vehicles(0);
  ObjectBox v;
  v.center = Vec3(10, 10, 0.8);
  v.size = Vec3(4, 2, 1.6);
  v.yaw = kPi / 2;
  const auto pose = vehicle_mount_pose(v, rec.cameras[0]).inverse();
  const Vec3 axis = pose.rotation * Vec3::UnitZ();
  EXPECT_NEAR(axis.x(), 0.0, 1e-12);
  EXPECT_NEAR(axis.y(), 1.0, 1e-12);
  // mount offset (1.5 forward) is rotated with the vehicle
  EXPECT_NEAR(pose.translation.x(), 10.0, 1e-12);
  EXPECT_NEAR(pose.translation.y(), 11.5, 1e-12);
  EXPECT_NEAR(pose.translation.z(), 1.6, 1e-12);
}

TEST(Cameras, MountHeightClamped) {
  auto rec = scene_with_vehicles(0);
  rec.cameras[0].camera_from_ego = RigidTransform::from_matrix(rec.cameras[0].camera_from_ego.inverse().matrix(),
                                                                Vec3(1.5, 0, 0.3)).inverse();
  ObjectBox v;
  v.center = Vec3(0, 0, 0.8);
  v.size = Vec3(4, 2, 1.6);
  EXPECT_NEAR(vehicle_mount_pose(v, rec.cameras[0]).inverse().translation.z(), 1.2, 1e-12);
}

TEST(Cameras, DeterministicAndErrors) {
  const auto rec = scene_with_vehicles(8);
  EXPECT_EQ(sample_cameras(rec, 6, 3), sample_cameras(rec, 6, 3));
  auto no_rig = rec;
  no_rig.cameras.clear();
  try {
    sample_cameras(no_rig, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoCameraRig);
  }
}

TEST(Cameras, FixtureGivesTwenty) {
  const auto cams = sample_cameras(fixture::fixture_record(), 20, 42);
  EXPECT_EQ(cams.size(), 20u);
}

}  // namespace
}  // namespace trove
