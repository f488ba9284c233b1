#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trove/scene.hpp"
#include "trove/taxonomy.hpp"

namespace trove {

// Scene geometry flattened into one triangle list in scene coordinates.
// Triangle order is the global tie-break index.
struct RenderScene {
  struct Tri {
    std::array<std::uint32_t, 3> v{};
    std::uint32_t instance = 0;  // 0 for static surfaces
    Class20 cls = Class20::Void;
  };
  std::vector<Vec3> vertices;
  std::vector<Tri> triangles;
};

// Instances first (in id order, each asset mesh scaled and posed), then the
// scene's surface meshes.
RenderScene prepare_render_scene(const SceneGraph& scene, const std::map<std::string, TriangleMesh>& asset_meshes);

struct RasterOptions {
  int width = 1600;
  int height = 900;
  double near = 0.1;
  double far = 1000.0;
  int threads = 1;   // 0 = hardware concurrency
  int tile = 64;     // tile edge, pixels
  // Instance hidden from this view; vehicle-mounted cameras hide their own
  // vehicle automatically.
  std::optional<std::uint32_t> exclude_instance;
  std::size_t min_box_pixels = 25;
  const ClassTaxonomy* taxonomy = nullptr;  // standard table when null
};

struct Box2D {
  std::uint32_t instance_id = 0;
  Class20 cls = Class20::Void;
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;  // inclusive pixel bounds
  std::size_t visible_pixels = 0;

  bool operator==(const Box2D&) const = default;
};

struct Box3D {
  std::uint32_t instance_id = 0;
  Class20 cls = Class20::Void;
  Vec3 center = Vec3::Zero();  // camera frame
  Vec3 size = Vec3::Ones();    // length, width, height
  double rotation_y = 0.0;     // heading about the camera y axis
  Quat rotation = Quat::Identity();  // camera_from_object
};

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> uv;        // interleaved (u, v), pixels
  std::vector<std::uint8_t> valid;
};

struct AnnotationBundle {
  int width = 0;
  int height = 0;
  CameraRig rig;  // at the rendered resolution
  std::vector<std::uint8_t> semantic20;
  std::vector<std::uint8_t> semantic13;
  std::vector<std::uint16_t> instance;
  std::vector<float> depth;    // camera-frame z, 0 = no hit
  std::vector<float> normals;  // interleaved xyz, camera frame
  std::optional<FlowField> flow;
  std::vector<Box2D> boxes2d;
  std::vector<Box3D> boxes3d;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

// Throws DegenerateCamera.
AnnotationBundle rasterize(const RenderScene& render, const SceneGraph& scene, const CameraSample& camera,
                           const RasterOptions& opts = {});

// Per-instance rigid motion in the scene frame from the first view's time to
// the second's; static surfaces do not move. Instances without an entry are
// treated as static and reported once as MissingMotion.
FlowField compute_flow(const SceneGraph& scene, const CameraSample& cam_t, const CameraSample& cam_t1,
                       const std::map<std::uint32_t, RigidTransform>& motions, const AnnotationBundle& frame_t,
                       Warnings* warnings = nullptr, double near = 0.1);

std::vector<Box2D> extract_boxes2d(const AnnotationBundle& bundle, const SceneGraph& scene,
                                   std::size_t min_pixels = 25);
std::vector<Box3D> boxes3d(const SceneGraph& scene, const CameraSample& camera, std::span<const Box2D> visible);

// Throws UnknownClassId.
std::vector<std::uint8_t> remap_semantic(std::span<const std::uint8_t> raster20, const ClassTaxonomy& taxonomy);

// Files written by write_bundle, relative to its directory.
struct BundlePaths {
  std::string semantic = "semantic.png";
  std::string semantic20 = "semantic20.png";
  std::string instance = "instance.png";
  std::string depth = "depth.pfm";
  std::string normals = "normals.png";
  std::string flow = "flow.flo";
  std::string boxes = "boxes.json";
  std::string palette = "palette.json";
};

// Writes every raster and the boxes file into `dir`; returns the written
// file names.
std::vector<std::string> write_bundle(const AnnotationBundle& bundle, const std::filesystem::path& dir,
                                      const ClassTaxonomy& taxonomy = ClassTaxonomy::standard());
std::string boxes_json(const AnnotationBundle& bundle, const ClassTaxonomy& taxonomy = ClassTaxonomy::standard());
// Class palette sidecar for the semantic PNGs.
std::string palette_json(const ClassTaxonomy& taxonomy);

}  // namespace trove
