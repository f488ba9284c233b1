#include <gtest/gtest.h>

#include <json.hpp>

#include "fixture.hpp"
#include "test_support.hpp"
#include "trove/annotate.hpp"
#include "trove/error.hpp"
#include "trove/pipeline.hpp"
#include "trove/raster_io.hpp"

namespace trove {
namespace {

RasterOptions opts(int w, int h, int threads = 1) {
  RasterOptions o;
  o.width = w;
  o.height = h;
  o.threads = threads;
  o.min_box_pixels = 1;
  return o;
}

SceneInstance instance(std::uint32_t id, Class20 cls) {
  SceneInstance s;
  s.id = id;
  s.cls = cls;
  s.asset_id = "a";
  return s;
}

TEST(Rasterize, QuadCoverageAndDepth) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 1, Class20::Car);
  SceneGraph g;
  g.instances.push_back(instance(1, Class20::Car));
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(800, 600));
  std::size_t covered = 0;
  for (std::size_t i = 0; i < b.instance.size(); ++i) {
    if (b.instance[i] == 1) {
      ++covered;
      EXPECT_EQ(b.depth[i], 10.0f);
      EXPECT_EQ(b.semantic20[i], static_cast<std::uint8_t>(Class20::Car));
      EXPECT_FLOAT_EQ(std::abs(b.normals[i * 3 + 2]), 1.0f);
    } else {
      EXPECT_EQ(b.depth[i], 0.0f);
      EXPECT_EQ(b.semantic20[i], static_cast<std::uint8_t>(Class20::Sky));
    }
  }
  EXPECT_NEAR(static_cast<double>(covered), 10000.0, 100.0);
  ASSERT_EQ(b.boxes2d.size(), 1u);
  EXPECT_EQ(b.boxes2d[0].visible_pixels, covered);
  EXPECT_EQ(b.boxes2d[0].cls, Class20::Car);
}

TEST(Rasterize, SharedEdgeCoveredOnce) {
  // two instances meet along x = 0; every pixel belongs to exactly one
  RenderScene r;
  test::add_quad(r, -1, -1, 0, 1, 10, 1, Class20::Car);
  test::add_quad(r, 0, -1, 1, 1, 10, 2, Class20::Truck);
  SceneGraph g;
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(800, 600));
  std::size_t a = 0, c = 0;
  for (auto v : b.instance) {
    a += v == 1;
    c += v == 2;
  }
  EXPECT_EQ(a + c, 10000u);
  EXPECT_EQ(a, c);
}

TEST(Rasterize, EqualDepthLowerInstanceWins) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 7, Class20::Car);
  test::add_quad(r, -1, -1, 1, 1, 10, 3, Class20::Truck);
  SceneGraph g;
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(800, 600));
  EXPECT_EQ(b.instance[b.index(400, 300)], 3);
  EXPECT_EQ(b.semantic20[b.index(400, 300)], static_cast<std::uint8_t>(Class20::Truck));
  for (auto v : b.instance) EXPECT_NE(v, 7);
}

TEST(Rasterize, NearerSurfaceOccludes) {
  RenderScene r;
  test::add_quad(r, -6, -6, 6, 6, 20, 1, Class20::Building);
  test::add_quad(r, -0.5, -0.5, 0.5, 0.5, 5, 2, Class20::Human);
  SceneGraph g;
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(800, 600));
  EXPECT_EQ(b.instance[b.index(400, 300)], 2);
  EXPECT_EQ(b.depth[b.index(400, 300)], 5.0f);
  EXPECT_EQ(b.instance[b.index(400 + 80, 300)], 1);
}

TEST(Rasterize, TiltedPlaneDepth) {
  // plane z = 10 + 0.5 x
  RenderScene r;
  r.vertices = {{-4, -3, 8}, {4, -3, 12}, {4, 3, 12}, {-4, 3, 8}};
  r.triangles = {{{0, 1, 2}, 0, Class20::Road}, {{0, 2, 3}, 0, Class20::Road}};
  SceneGraph g;
  const auto cam = test::identity_camera(640, 480, 400, 320, 240);
  const auto b = rasterize(r, g, cam, opts(640, 480));
  std::size_t checked = 0;
  double worst = 0;
  for (int y = 0; y < 480; y += 7) {
    for (int x = 0; x < 640; x += 7) {
      const float z = b.depth[b.index(x, y)];
      if (z == 0) continue;
      const double rx = (x + 0.5 - 320) / 400.0;
      const double expect = 10.0 / (1.0 - 0.5 * rx);  // z = 10 + 0.5 rx z
      worst = std::max(worst, std::abs(z - expect));
      ++checked;
    }
  }
  EXPECT_GT(checked, 500u);
  EXPECT_LT(worst, 1e-3);
}

TEST(Rasterize, ThreadsBitIdentical) {
  test::TempDir dir("annot");
  const auto paths = fixture::write_fixture(dir.path());
  const auto cfg = load_pipeline_config(paths.config);
  const auto cat = load_catalog(paths.catalog);
  const auto built = build_scene(cfg, std::string(fixture::kSceneId), cat, ClassTaxonomy::standard());
  const auto render = prepare_render_scene(built.graph, load_instance_meshes(built.graph, cat));
  const auto& cam = built.graph.cameras[0];
  const auto a = rasterize(render, built.graph, cam, opts(480, 270, 1));
  auto o4 = opts(480, 270, 4);
  o4.tile = 16;
  const auto b = rasterize(render, built.graph, cam, o4);
  EXPECT_EQ(a.semantic20, b.semantic20);
  EXPECT_EQ(a.instance, b.instance);
  EXPECT_EQ(a.depth, b.depth);
  EXPECT_EQ(a.normals, b.normals);
  EXPECT_EQ(a.boxes2d, b.boxes2d);
  // the ego-clone view of a real scene sees road and sky
  std::set<std::uint8_t> classes(a.semantic20.begin(), a.semantic20.end());
  EXPECT_TRUE(classes.count(static_cast<std::uint8_t>(Class20::Road)));
  EXPECT_TRUE(classes.count(static_cast<std::uint8_t>(Class20::Sky)));
}

TEST(Rasterize, InstanceAndSemanticAgree) {
  test::TempDir dir("annot");
  const auto paths = fixture::write_fixture(dir.path());
  const auto cfg = load_pipeline_config(paths.config);
  const auto cat = load_catalog(paths.catalog);
  const auto built = build_scene(cfg, std::string(fixture::kSceneId), cat, ClassTaxonomy::standard());
  const auto render = prepare_render_scene(built.graph, load_instance_meshes(built.graph, cat));
  for (std::size_t c = 0; c < 3; ++c) {
    const auto b = rasterize(render, built.graph, built.graph.cameras[c], opts(320, 180));
    for (std::size_t i = 0; i < b.instance.size(); ++i) {
      if (b.instance[i] == 0) continue;
      const auto* inst = built.graph.find(b.instance[i]);
      ASSERT_NE(inst, nullptr);
      EXPECT_EQ(b.semantic20[i], static_cast<std::uint8_t>(inst->cls));
    }
    for (const auto& box : b.boxes3d) EXPECT_GT(box.center.z(), 0.0);
  }
}

TEST(Rasterize, MountedCameraHidesOwnVehicle) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 2, 1, Class20::Car);
  SceneGraph g;
  auto car = instance(1, Class20::Car);
  car.source = "car-0001";
  g.instances.push_back(car);
  auto cam = test::identity_camera(200, 100, 100, 100, 50);
  cam.source = VehicleMount{"car-0001"};
  const auto b = rasterize(r, g, cam, opts(200, 100));
  for (auto v : b.instance) EXPECT_EQ(v, 0);
  cam.source = EgoClone{0};
  EXPECT_EQ(rasterize(r, g, cam, opts(200, 100)).instance[b.index(100, 50)], 1);
}

TEST(Rasterize, ResizedIntrinsics) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 1, Class20::Car);
  SceneGraph g;
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(400, 300));
  EXPECT_DOUBLE_EQ(b.rig.intrinsics.fx, 250.0);
  std::size_t covered = 0;
  for (auto v : b.instance) covered += v == 1;
  EXPECT_NEAR(static_cast<double>(covered), 2500.0, 60.0);
}

TEST(Rasterize, DegenerateCamera) {
  RenderScene r;
  SceneGraph g;
  auto cam = test::identity_camera(800, 600, 0, 400, 300);
  try {
    rasterize(r, g, cam, opts(800, 600));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateCamera);
  }
  cam = test::identity_camera(800, 600, 500, 400, 300);
  cam.camera_from_scene.translation.x() = std::nan("");
  EXPECT_THROW(rasterize(r, g, cam, opts(800, 600)), Error);
}

TEST(Rasterize, EmptySceneAllSky) {
  const auto b = rasterize({}, {}, test::identity_camera(64, 48, 50, 32, 24), opts(64, 48));
  for (auto v : b.semantic20) EXPECT_EQ(v, static_cast<std::uint8_t>(Class20::Sky));
  for (auto d : b.depth) EXPECT_EQ(d, 0.0f);
  EXPECT_TRUE(b.boxes2d.empty());
}

TEST(Flow, StaticSceneStaticCameraIsZero) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 0, Class20::Building);
  SceneGraph g;
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(800, 600));
  const auto f = compute_flow(g, cam, cam, {}, b);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < b.depth.size(); ++i) {
    if (!f.valid[i]) continue;
    ++valid;
    EXPECT_EQ(f.uv[i * 2], 0.0f);
    EXPECT_EQ(f.uv[i * 2 + 1], 0.0f);
  }
  EXPECT_GT(valid, 9000u);
}

TEST(Flow, CameraTranslation) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 0, Class20::Building);
  SceneGraph g;
  const auto cam0 = test::identity_camera(800, 600, 500, 400, 300);
  auto cam1 = cam0;
  cam1.camera_from_scene.translation = Vec3(-0.5, 0, 0);  // camera moved +0.5 m along x
  const auto b = rasterize(r, g, cam0, opts(800, 600));
  const auto f = compute_flow(g, cam0, cam1, {}, b);
  const std::size_t i = b.index(400, 300);
  ASSERT_TRUE(f.valid[i]);
  EXPECT_NEAR(f.uv[i * 2], -25.0, 1e-3);
  EXPECT_NEAR(f.uv[i * 2 + 1], 0.0, 1e-3);
}

TEST(Flow, ObjectMotionAndMissingMotion) {
  RenderScene r;
  test::add_quad(r, -3, -3, 3, 3, 20, 0, Class20::Building);
  test::add_quad(r, -0.5, -0.5, 0.5, 0.5, 10, 4, Class20::Car);
  SceneGraph g;
  g.instances.push_back(instance(4, Class20::Car));
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const auto b = rasterize(r, g, cam, opts(800, 600));
  std::map<std::uint32_t, RigidTransform> motion{{4, RigidTransform{Quat::Identity(), Vec3(0.5, 0, 0)}}};
  const auto f = compute_flow(g, cam, cam, motion, b);
  const std::size_t obj = b.index(400, 300), bg = b.index(400 + 60, 300);
  EXPECT_NEAR(f.uv[obj * 2], 25.0, 1e-3);
  EXPECT_EQ(f.uv[bg * 2], 0.0f);
  Warnings w;
  const auto f2 = compute_flow(g, cam, cam, {}, b, &w);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].code, Errc::MissingMotion);
  EXPECT_EQ(f2.uv[obj * 2], 0.0f);
}

TEST(Boxes2D, TightBoundsAndMinimum) {
  AnnotationBundle b;
  b.width = 40;
  b.height = 20;
  b.instance.assign(800, 0);
  for (int y = 5; y <= 9; ++y)
    for (int x = 10; x <= 19; ++x) b.instance[b.index(x, y)] = 3;
  b.instance[b.index(30, 15)] = 8;
  SceneGraph g;
  g.instances.push_back(instance(3, Class20::Bus));
  const auto boxes = extract_boxes2d(b, g, 25);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].x_min, 10);
  EXPECT_EQ(boxes[0].x_max, 19);
  EXPECT_EQ(boxes[0].y_min, 5);
  EXPECT_EQ(boxes[0].y_max, 9);
  EXPECT_EQ(boxes[0].visible_pixels, 50u);
  EXPECT_EQ(boxes[0].cls, Class20::Bus);
  EXPECT_EQ(extract_boxes2d(b, g, 51).size(), 0u);
  EXPECT_EQ(extract_boxes2d(b, g, 1).size(), 2u);
}

TEST(Boxes2D, OccludedPartExcluded) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 1, Class20::Car);
  test::add_quad(r, 0, -2, 2, 2, 5, 2, Class20::Building);  // covers the right half of the car
  SceneGraph g;
  g.instances = {instance(1, Class20::Car), instance(2, Class20::Building)};
  const auto b = rasterize(r, g, test::identity_camera(800, 600, 500, 400, 300), opts(800, 600));
  const auto it = std::find_if(b.boxes2d.begin(), b.boxes2d.end(), [](const Box2D& x) { return x.instance_id == 1; });
  ASSERT_NE(it, b.boxes2d.end());
  EXPECT_EQ(it->x_min, 350);
  EXPECT_EQ(it->x_max, 399);
  EXPECT_NEAR(static_cast<double>(it->visible_pixels), 5000.0, 60.0);
}

TEST(Boxes3D, CameraFrame) {
  SceneGraph g;
  auto car = instance(1, Class20::Car);
  car.pose = RigidTransform{Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY())), Vec3(1, 0, 10)};
  car.size = Vec3(4, 2, 1.5);
  g.instances.push_back(car);
  const auto cam = test::identity_camera(800, 600, 500, 400, 300);
  const Box2D vis{1, Class20::Car, 0, 0, 1, 1, 4};
  const auto boxes = boxes3d(g, cam, std::span(&vis, 1));
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_LT((boxes[0].center - Vec3(1, 0, 10)).norm(), 1e-12);
  EXPECT_EQ(boxes[0].size, car.size);
  EXPECT_NEAR(boxes[0].rotation_y, 0.3, 1e-12);
}

TEST(Remap, MatchesTableLookup) {
  const auto& tax = ClassTaxonomy::standard();
  Rng rng(3);
  std::vector<std::uint8_t> raster(50000);
  for (auto& v : raster) v = static_cast<std::uint8_t>(rng.index(kNumClasses20));
  const auto out = remap_semantic(raster, tax);
  for (std::size_t i = 0; i < raster.size(); ++i) {
    EXPECT_EQ(out[i], static_cast<std::uint8_t>(tax.remap13()[raster[i]]));
  }
  raster[17] = 20;
  try {
    remap_semantic(raster, tax);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownClassId);
  }
}

TEST(Bundle, WritesAllFiles) {
  RenderScene r;
  test::add_quad(r, -1, -1, 1, 1, 10, 1, Class20::Car);
  SceneGraph g;
  g.instances.push_back(instance(1, Class20::Car));
  const auto cam = test::identity_camera(160, 120, 100, 80, 60);
  auto b = rasterize(r, g, cam, opts(160, 120));
  b.flow = compute_flow(g, cam, cam, {{1, RigidTransform::identity()}}, b);
  test::TempDir dir("bundle");
  const auto files = write_bundle(b, dir.path());
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  EXPECT_EQ(files.size(), 8u);
  int w = 0, h = 0;
  const auto depth = decode_pfm(read_binary_file(dir / "depth.pfm"), w, h);
  EXPECT_EQ(depth, b.depth);
  const auto inst = decode_png(read_binary_file(dir / "instance.png"));
  EXPECT_EQ(inst.bit_depth, 16);
  EXPECT_EQ(inst.samples, b.instance);
  const auto boxes = nlohmann::json::parse(boxes_json(b));
  EXPECT_EQ(boxes["boxes2d"].size(), 1u);
  const auto sem = decode_png(read_binary_file(dir / "semantic.png"));
  EXPECT_EQ(sem.channels, 1);
  for (std::size_t i = 0; i < sem.samples.size(); ++i) EXPECT_EQ(sem.samples[i], b.semantic13[i]);
}

}  // namespace
}  // namespace trove
