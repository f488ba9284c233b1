#include <bit>
#include <cmath>
#include <json.hpp>

#include "trove/error.hpp"
#include "trove/scene.hpp"

namespace trove {

using nlohmann::json;

namespace {

constexpr int kArrayBuffer = 34962;
constexpr int kElementArrayBuffer = 34963;
constexpr int kFloat = 5126;
constexpr int kUnsignedInt = 5125;
constexpr int kTriangles = 4;

constexpr std::string_view kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

class GltfBuilder {
 public:
  // Returns the mesh index.
  int add_mesh(const std::string& name, const TriangleMesh& mesh, std::optional<int> material) {
    const std::size_t pos_offset = buffer_.size();
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& v : mesh.vertices) {
      for (int k = 0; k < 3; ++k) {
        const float f = static_cast<float>(v[k]);
        put_u32(std::bit_cast<std::uint32_t>(f));
        lo[k] = std::min(lo[k], static_cast<double>(f));
        hi[k] = std::max(hi[k], static_cast<double>(f));
      }
    }
    const std::size_t idx_offset = buffer_.size();
    for (const auto& t : mesh.triangles) {
      for (auto i : t) put_u32(i);
    }
    const int pos_view = add_view(pos_offset, idx_offset - pos_offset, kArrayBuffer);
    const int idx_view = add_view(idx_offset, buffer_.size() - idx_offset, kElementArrayBuffer);
    const int pos_acc = static_cast<int>(accessors_.size());
    accessors_.push_back({{"bufferView", pos_view},
                          {"componentType", kFloat},
                          {"count", mesh.vertices.size()},
                          {"type", "VEC3"},
                          {"min", {lo.x(), lo.y(), lo.z()}},
                          {"max", {hi.x(), hi.y(), hi.z()}}});
    const int idx_acc = static_cast<int>(accessors_.size());
    accessors_.push_back({{"bufferView", idx_view},
                          {"componentType", kUnsignedInt},
                          {"count", mesh.triangles.size() * 3},
                          {"type", "SCALAR"}});
    json prim = {{"attributes", {{"POSITION", pos_acc}}}, {"indices", idx_acc}, {"mode", kTriangles}};
    if (material) prim["material"] = *material;
    meshes_.push_back({{"name", name}, {"primitives", json::array({prim})}});
    return static_cast<int>(meshes_.size() - 1);
  }

  json finish(json doc) {
    if (!buffer_.empty()) {
      doc["buffers"] = json::array({{{"byteLength", buffer_.size()},
                                     {"uri", "data:application/octet-stream;base64," + base64_encode(buffer_)}}});
      doc["bufferViews"] = views_;
      doc["accessors"] = accessors_;
      doc["meshes"] = meshes_;
    }
    return doc;
  }

 private:
  void put_u32(std::uint32_t u) {
    for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
  }
  int add_view(std::size_t offset, std::size_t length, int target) {
    views_.push_back({{"buffer", 0}, {"byteOffset", offset}, {"byteLength", length}, {"target", target}});
    return static_cast<int>(views_.size() - 1);
  }

  std::vector<std::uint8_t> buffer_;
  json views_ = json::array();
  json accessors_ = json::array();
  json meshes_ = json::array();
};

json quat_xyzw(const Quat& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = static_cast<std::uint32_t>(bytes[i]) << 16 | static_cast<std::uint32_t>(bytes[i + 1]) << 8 | bytes[i + 2];
    out += kB64[(n >> 18) & 63];
    out += kB64[(n >> 12) & 63];
    out += kB64[(n >> 6) & 63];
    out += kB64[n & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t n = static_cast<std::uint32_t>(bytes[i]) << 16;
    out += kB64[(n >> 18) & 63];
    out += kB64[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t n = static_cast<std::uint32_t>(bytes[i]) << 16 | static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    out += kB64[(n >> 18) & 63];
    out += kB64[(n >> 12) & 63];
    out += kB64[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const auto pos = kB64.find(c);
    if (pos == std::string_view::npos) throw Error(Errc::CorruptStream, "invalid base64 character");
    acc = acc << 6 | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::string export_interchange(const SceneGraph& scene, const AssetCatalog& catalog) {
  const auto asset_meshes = load_instance_meshes(scene, catalog);
  const auto& tax = ClassTaxonomy::standard();
  GltfBuilder builder;

  json materials = json::array();
  std::map<std::string, int> material_index;  // by role
  for (const auto& [role, id] : scene.materials) {
    material_index[role] = static_cast<int>(materials.size());
    materials.push_back({{"name", id}, {"extras", {{"material_id", id}, {"surface_role", role}}}});
  }

  std::map<std::string, int> mesh_of_asset;
  for (const auto& [asset_id, mesh] : asset_meshes) mesh_of_asset[asset_id] = builder.add_mesh("asset_" + asset_id, mesh, std::nullopt);

  json nodes = json::array();
  json root = {{"name", "trove_root"},
               // z-up scene to y-up glTF: -90 degrees about x
               {"rotation", json::array({-std::sqrt(0.5), 0.0, 0.0, std::sqrt(0.5)})},
               {"children", json::array()}};
  nodes.push_back(root);
  auto add_child = [&](json node) {
    nodes[0]["children"].push_back(nodes.size());
    nodes.push_back(std::move(node));
  };

  for (const auto& inst : scene.instances) {
    add_child({{"name", "inst_" + std::to_string(inst.id) + "_" + class_slug(tax.name(inst.cls))},
               {"mesh", mesh_of_asset.at(inst.asset_id)},
               {"translation", vec_json(inst.pose.translation)},
               {"rotation", quat_xyzw(inst.pose.rotation)},
               {"scale", json::array({inst.scale, inst.scale, inst.scale})},
               {"extras",
                {{"instance_id", inst.id},
                 {"asset_id", inst.asset_id},
                 {"class", tax.name(inst.cls)},
                 {"source", inst.source}}}});
  }
  for (const auto& m : scene.meshes) {
    const std::string role(to_string(m.role));
    std::optional<int> mat;
    if (auto it = material_index.find(role); it != material_index.end()) mat = it->second;
    const int mesh = builder.add_mesh(m.name, m.mesh, mat);
    json extras = {{"class", tax.name(m.cls)}, {"surface_role", role}};
    if (auto it = scene.materials.find(role); it != scene.materials.end()) extras["material_id"] = it->second;
    add_child({{"name", "surface_" + m.name}, {"mesh", mesh}, {"extras", std::move(extras)}});
  }

  json cameras = json::array();
  for (std::size_t k = 0; k < scene.cameras.size(); ++k) {
    const auto& cam = scene.cameras[k];
    const auto& in = cam.rig.intrinsics;
    cameras.push_back({{"type", "perspective"},
                       {"name", cam.rig.name},
                       {"perspective",
                        {{"yfov", 2.0 * std::atan(cam.rig.height / (2.0 * in.fy))},
                         {"aspectRatio", static_cast<double>(cam.rig.width) / cam.rig.height},
                         {"znear", 0.1},
                         {"zfar", 1000.0}}}});
    // glTF cameras look down -z with +y up; ours look down +z with +y down.
    const RigidTransform flip{Quat(Eigen::AngleAxisd(kPi, Vec3::UnitX())), Vec3::Zero()};
    const RigidTransform node_pose = cam.camera_from_scene.inverse() * flip;
    add_child({{"name", "cam_" + std::to_string(k) + "_" + cam.rig.name},
               {"camera", k},
               {"translation", vec_json(node_pose.translation)},
               {"rotation", quat_xyzw(node_pose.rotation)},
               {"extras",
                {{"fx", in.fx},
                 {"fy", in.fy},
                 {"cx", in.cx},
                 {"cy", in.cy},
                 {"width", cam.rig.width},
                 {"height", cam.rig.height}}}});
  }

  json doc;
  doc["asset"] = {{"version", "2.0"}, {"generator", "trove"}};
  doc["scene"] = 0;
  doc["scenes"] = json::array({{{"name", scene.meta.scene_id},
                                {"nodes", json::array({0})},
                                {"extras",
                                 {{"schema", std::string(kSceneSchema)},
                                  {"seed", scene.meta.seed},
                                  {"hdri", scene.hdri_id},
                                  {"materials", scene.materials}}}}});
  doc["nodes"] = std::move(nodes);
  if (!cameras.empty()) doc["cameras"] = std::move(cameras);
  if (!materials.empty()) doc["materials"] = std::move(materials);
  return builder.finish(std::move(doc)).dump(1) + "\n";
}

}  // namespace trove
