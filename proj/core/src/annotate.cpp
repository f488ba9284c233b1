#include "trove/annotate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <json.hpp>
#include <thread>

#include "trove/error.hpp"
#include "trove/raster_io.hpp"

namespace trove {

using nlohmann::json;

RenderScene prepare_render_scene(const SceneGraph& scene, const std::map<std::string, TriangleMesh>& asset_meshes) {
  RenderScene out;
  auto add = [&](const TriangleMesh& mesh, auto&& to_scene, std::uint32_t instance, Class20 cls) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    for (const auto& v : mesh.vertices) out.vertices.push_back(to_scene(v));
    for (const auto& t : mesh.triangles) out.triangles.push_back({{t[0] + base, t[1] + base, t[2] + base}, instance, cls});
  };
  for (const auto& inst : scene.instances) {
    auto it = asset_meshes.find(inst.asset_id);
    if (it == asset_meshes.end()) throw Error(Errc::DanglingAssetRef, "no mesh loaded for asset '" + inst.asset_id + "'");
    add(it->second, [&](const Vec3& v) { return inst.pose.apply(v * inst.scale); }, inst.id, inst.cls);
  }
  for (const auto& m : scene.meshes) {
    add(m.mesh, [](const Vec3& v) { return v; }, 0, m.cls);
  }
  return out;
}

namespace {

constexpr int kSubpixelBits = 4;
constexpr std::int64_t kSubpixel = 1 << kSubpixelBits;

struct ScreenTri {
  std::array<std::int64_t, 3> x{}, y{};  // fixed-point screen coordinates
  Vec3 normal;                           // unit, facing the camera
  double plane_d = 0.0;                  // normal . P = plane_d
  std::uint32_t instance = 0;
  std::uint32_t index = 0;
  Class20 cls = Class20::Void;
  int bx0 = 0, by0 = 0, bx1 = 0, by1 = 0;  // inclusive pixel bounds
};

using Poly = std::vector<Vec3>;

// Keeps the part of `in` where f(P) >= 0.
template <class F>
Poly clip(const Poly& in, F&& f) {
  Poly out;
  if (in.empty()) return out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Vec3& a = in[i];
    const Vec3& b = in[(i + 1) % in.size()];
    const double fa = f(a), fb = f(b);
    if (fa >= 0) out.push_back(a);
    if ((fa >= 0) != (fb >= 0)) {
      const double t = fa / (fa - fb);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

void validate_camera(const CameraRig& rig, const RigidTransform& pose) {
  const auto& k = rig.intrinsics;
  const bool ok = std::isfinite(k.fx) && std::isfinite(k.fy) && std::isfinite(k.cx) && std::isfinite(k.cy) &&
                  k.fx > 0 && k.fy > 0 && rig.width > 0 && rig.height > 0 && pose.is_valid(1e-6) &&
                  pose.translation.allFinite();
  if (!ok) throw Error(Errc::DegenerateCamera, "camera '" + rig.name + "' has non-invertible intrinsics or pose");
}

struct Frame {
  CameraRig rig;
  int width = 0, height = 0;
};

Frame frame_for(const CameraSample& camera, int width, int height) {
  validate_camera(camera.rig, camera.camera_from_scene);
  if (width <= 0 || height <= 0) throw Error(Errc::DegenerateCamera, "render resolution must be positive");
  Frame f;
  f.rig = (camera.rig.width == width && camera.rig.height == height) ? camera.rig : camera.rig.resized(width, height);
  f.width = width;
  f.height = height;
  return f;
}

std::vector<ScreenTri> project(const RenderScene& render, const RigidTransform& cam_from_scene, const Frame& frame,
                               const RasterOptions& opts, std::optional<std::uint32_t> hidden) {
  const auto& k = frame.rig.intrinsics;
  const double guard = 2.0 * std::max(frame.width, frame.height) + 64.0;
  std::vector<Vec3> cam(render.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = cam_from_scene.apply(render.vertices[i]);

  std::vector<ScreenTri> out;
  out.reserve(render.triangles.size());
  for (std::size_t ti = 0; ti < render.triangles.size(); ++ti) {
    const auto& tri = render.triangles[ti];
    if (hidden && tri.instance == *hidden) continue;
    const Vec3& a = cam[tri.v[0]];
    const Vec3& b = cam[tri.v[1]];
    const Vec3& c = cam[tri.v[2]];
    if (a.z() < opts.near && b.z() < opts.near && c.z() < opts.near) continue;
    if (a.z() > opts.far && b.z() > opts.far && c.z() > opts.far) continue;
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(len > 0.0)) continue;
    n /= len;
    double d = n.dot(a);
    if (d == 0.0) continue;  // plane through the eye
    if (d > 0) {
      n = -n;
      d = -d;
    }

    Poly poly{a, b, c};
    poly = clip(poly, [&](const Vec3& p) { return p.z() - opts.near; });
    poly = clip(poly, [&](const Vec3& p) { return guard * p.z() - k.fx * p.x(); });
    poly = clip(poly, [&](const Vec3& p) { return guard * p.z() + k.fx * p.x(); });
    poly = clip(poly, [&](const Vec3& p) { return guard * p.z() - k.fy * p.y(); });
    poly = clip(poly, [&](const Vec3& p) { return guard * p.z() + k.fy * p.y(); });
    if (poly.size() < 3) continue;

    std::vector<std::array<std::int64_t, 2>> pts(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const double u = k.fx * poly[i].x() / poly[i].z() + k.cx;
      const double v = k.fy * poly[i].y() / poly[i].z() + k.cy;
      pts[i] = {std::llround(u * kSubpixel), std::llround(v * kSubpixel)};
    }
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      ScreenTri st;
      st.x = {pts[0][0], pts[i][0], pts[i + 1][0]};
      st.y = {pts[0][1], pts[i][1], pts[i + 1][1]};
      const std::int64_t area = (st.x[1] - st.x[0]) * (st.y[2] - st.y[0]) - (st.y[1] - st.y[0]) * (st.x[2] - st.x[0]);
      if (area == 0) continue;
      if (area < 0) {
        std::swap(st.x[1], st.x[2]);
        std::swap(st.y[1], st.y[2]);
      }
      const auto [xmin, xmax] = std::minmax({st.x[0], st.x[1], st.x[2]});
      const auto [ymin, ymax] = std::minmax({st.y[0], st.y[1], st.y[2]});
      // pixel i samples at 16 i + 8 in fixed point
      st.bx0 = static_cast<int>(std::max<std::int64_t>(0, (xmin - kSubpixel / 2 + kSubpixel - 1) >> kSubpixelBits));
      st.by0 = static_cast<int>(std::max<std::int64_t>(0, (ymin - kSubpixel / 2 + kSubpixel - 1) >> kSubpixelBits));
      st.bx1 = static_cast<int>(std::min<std::int64_t>(frame.width - 1, (xmax - kSubpixel / 2) >> kSubpixelBits));
      st.by1 = static_cast<int>(std::min<std::int64_t>(frame.height - 1, (ymax - kSubpixel / 2) >> kSubpixelBits));
      if (st.bx0 > st.bx1 || st.by0 > st.by1) continue;
      st.normal = n;
      st.plane_d = d;
      st.instance = tri.instance;
      st.index = static_cast<std::uint32_t>(ti);
      st.cls = tri.cls;
      out.push_back(st);
    }
  }
  return out;
}

struct PixelHit {
  double z = std::numeric_limits<double>::infinity();
  std::uint32_t instance = 0;
  std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
  const ScreenTri* tri = nullptr;
};

bool better(double z, std::uint32_t inst, std::uint32_t idx, const PixelHit& cur) {
  if (z != cur.z) return z < cur.z;
  if (inst != cur.instance) return inst < cur.instance;
  return idx < cur.index;
}

void raster_tile(const std::vector<ScreenTri>& tris, const std::vector<std::uint32_t>& bin, int x0, int y0, int x1,
                 int y1, const Frame& frame, const RasterOptions& opts, std::vector<PixelHit>& hits) {
  const auto& k = frame.rig.intrinsics;
  const int tw = x1 - x0;
  for (std::uint32_t ti : bin) {
    const ScreenTri& t = tris[ti];
    const int px0 = std::max(x0, t.bx0), px1 = std::min(x1 - 1, t.bx1);
    const int py0 = std::max(y0, t.by0), py1 = std::min(y1 - 1, t.by1);
    if (px0 > px1 || py0 > py1) continue;
    std::array<std::int64_t, 3> ex{}, ey{}, bias{};
    for (int e = 0; e < 3; ++e) {
      const int a = e, b = (e + 1) % 3;
      ex[e] = t.x[b] - t.x[a];
      ey[e] = t.y[b] - t.y[a];
      // top-left rule: of the two triangles sharing an edge exactly one owns it
      const bool owns = ey[e] > 0 || (ey[e] == 0 && ex[e] < 0);
      bias[e] = owns ? 0 : -1;
    }
    for (int py = py0; py <= py1; ++py) {
      const std::int64_t sy = static_cast<std::int64_t>(py) * kSubpixel + kSubpixel / 2;
      const double ry = (py + 0.5 - k.cy) / k.fy;
      for (int px = px0; px <= px1; ++px) {
        const std::int64_t sx = static_cast<std::int64_t>(px) * kSubpixel + kSubpixel / 2;
        bool inside = true;
        for (int e = 0; e < 3 && inside; ++e) {
          const std::int64_t w = ex[e] * (sy - t.y[e]) - ey[e] * (sx - t.x[e]);
          inside = w + bias[e] >= 0;
        }
        if (!inside) continue;
        const double rx = (px + 0.5 - k.cx) / k.fx;
        const double denom = t.normal.x() * rx + t.normal.y() * ry + t.normal.z();
        const double z = t.plane_d / denom;
        if (!std::isfinite(z) || z < opts.near * (1.0 - 1e-9) || z > opts.far) continue;
        PixelHit& h = hits[static_cast<std::size_t>(py - y0) * tw + (px - x0)];
        if (better(z, t.instance, t.index, h)) h = {z, t.instance, t.index, &t};
      }
    }
  }
}

std::optional<std::uint32_t> own_vehicle(const SceneGraph& scene, const CameraSample& camera) {
  if (const auto* m = std::get_if<VehicleMount>(&camera.source)) {
    for (const auto& inst : scene.instances) {
      if (inst.source == m->object_id) return inst.id;
    }
  }
  return std::nullopt;
}

}  // namespace

AnnotationBundle rasterize(const RenderScene& render, const SceneGraph& scene, const CameraSample& camera,
                           const RasterOptions& opts) {
  const Frame frame = frame_for(camera, opts.width, opts.height);
  if (scene.instances.size() > 0xffff) throw Error(Errc::DegenerateInput, "more than 65535 instances");
  const ClassTaxonomy& tax = opts.taxonomy ? *opts.taxonomy : ClassTaxonomy::standard();
  const auto hidden = opts.exclude_instance ? opts.exclude_instance : own_vehicle(scene, camera);

  const auto tris = project(render, camera.camera_from_scene, frame, opts, hidden);

  const int tile = std::max(8, opts.tile);
  const int tiles_x = (frame.width + tile - 1) / tile;
  const int tiles_y = (frame.height + tile - 1) / tile;
  std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::uint32_t i = 0; i < tris.size(); ++i) {
    const auto& t = tris[i];
    for (int ty = t.by0 / tile; ty <= t.by1 / tile; ++ty) {
      for (int tx = t.bx0 / tile; tx <= t.bx1 / tile; ++tx) bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(i);
    }
  }

  AnnotationBundle out;
  out.width = frame.width;
  out.height = frame.height;
  out.rig = frame.rig;
  const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
  out.semantic20.assign(n, static_cast<std::uint8_t>(Class20::Sky));
  out.instance.assign(n, 0);
  out.depth.assign(n, 0.0f);
  out.normals.assign(n * 3, 0.0f);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    std::vector<PixelHit> hits;
    for (std::size_t b = next++; b < bins.size(); b = next++) {
      const int tx = static_cast<int>(b % tiles_x), ty = static_cast<int>(b / tiles_x);
      const int x0 = tx * tile, y0 = ty * tile;
      const int x1 = std::min(frame.width, x0 + tile), y1 = std::min(frame.height, y0 + tile);
      hits.assign(static_cast<std::size_t>(x1 - x0) * (y1 - y0), PixelHit{});
      raster_tile(tris, bins[b], x0, y0, x1, y1, frame, opts, hits);
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const PixelHit& h = hits[static_cast<std::size_t>(y - y0) * (x1 - x0) + (x - x0)];
          if (!h.tri) continue;
          const std::size_t i = out.index(x, y);
          out.semantic20[i] = static_cast<std::uint8_t>(h.tri->cls);
          out.instance[i] = static_cast<std::uint16_t>(h.instance);
          out.depth[i] = static_cast<float>(h.z);
          for (int c = 0; c < 3; ++c) out.normals[i * 3 + c] = static_cast<float>(h.tri->normal[c]);
        }
      }
    }
  };
  int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(bins.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  out.semantic13 = remap_semantic(out.semantic20, tax);
  out.boxes2d = extract_boxes2d(out, scene, opts.min_box_pixels);
  out.boxes3d = boxes3d(scene, camera, out.boxes2d);
  return out;
}

FlowField compute_flow(const SceneGraph& /*scene*/, const CameraSample& cam_t, const CameraSample& cam_t1,
                       const std::map<std::uint32_t, RigidTransform>& motions, const AnnotationBundle& frame_t,
                       Warnings* warnings, double near) {
  const Frame f0 = frame_for(cam_t, frame_t.width, frame_t.height);
  const Frame f1 = frame_for(cam_t1, frame_t.width, frame_t.height);
  const auto& k0 = f0.rig.intrinsics;
  const auto& k1 = f1.rig.intrinsics;
  const RigidTransform scene_from_t = cam_t.camera_from_scene.inverse();
  const RigidTransform& t1_from_scene = cam_t1.camera_from_scene;

  FlowField flow;
  flow.width = frame_t.width;
  flow.height = frame_t.height;
  const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
  flow.uv.assign(n * 2, kFloUnknown);
  flow.valid.assign(n, 0);

  std::vector<std::uint32_t> missing;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const std::size_t i = frame_t.index(x, y);
      const double z = frame_t.depth[i];
      if (!(z > 0.0)) continue;
      const double px = x + 0.5, py = y + 0.5;
      Vec3 p = scene_from_t.apply(Vec3((px - k0.cx) / k0.fx * z, (py - k0.cy) / k0.fy * z, z));
      // both ends are projections of the same scene point, so identical
      // views and no motion give exactly zero flow
      const Vec3 p0 = cam_t.camera_from_scene.apply(p);
      const double u0 = k0.fx * p0.x() / p0.z() + k0.cx;
      const double v0 = k0.fy * p0.y() / p0.z() + k0.cy;
      const std::uint32_t inst = frame_t.instance[i];
      if (inst != 0) {
        auto it = motions.find(inst);
        if (it != motions.end()) {
          p = it->second.apply(p);
        } else if (std::find(missing.begin(), missing.end(), inst) == missing.end()) {
          missing.push_back(inst);
        }
      }
      const Vec3 q = t1_from_scene.apply(p);
      if (!(q.z() > near)) continue;
      const double u1 = k1.fx * q.x() / q.z() + k1.cx;
      const double v1 = k1.fy * q.y() / q.z() + k1.cy;
      if (u1 < 0 || v1 < 0 || u1 >= flow.width || v1 >= flow.height) continue;
      flow.uv[i * 2] = static_cast<float>(u1 - u0);
      flow.uv[i * 2 + 1] = static_cast<float>(v1 - v0);
      flow.valid[i] = 1;
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string ids;
    for (auto id : missing) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    Warning w{Errc::MissingMotion, "no motion for instances " + ids + "; treated as static"};
    if (warnings) warnings->push_back(w);
    log_warning(w);
  }
  return flow;
}

std::vector<Box2D> extract_boxes2d(const AnnotationBundle& bundle, const SceneGraph& scene, std::size_t min_pixels) {
  std::map<std::uint32_t, Box2D> acc;
  for (int y = 0; y < bundle.height; ++y) {
    for (int x = 0; x < bundle.width; ++x) {
      const std::uint32_t id = bundle.instance[bundle.index(x, y)];
      if (id == 0) continue;
      auto [it, fresh] = acc.try_emplace(id);
      Box2D& b = it->second;
      if (fresh) {
        b.instance_id = id;
        b.x_min = b.x_max = x;
        b.y_min = b.y_max = y;
      }
      b.x_min = std::min(b.x_min, x);
      b.x_max = std::max(b.x_max, x);
      b.y_min = std::min(b.y_min, y);
      b.y_max = std::max(b.y_max, y);
      ++b.visible_pixels;
    }
  }
  std::vector<Box2D> out;
  for (auto& [id, b] : acc) {
    if (b.visible_pixels < min_pixels) continue;
    if (const SceneInstance* inst = scene.find(id)) b.cls = inst->cls;
    out.push_back(b);
  }
  return out;
}

std::vector<Box3D> boxes3d(const SceneGraph& scene, const CameraSample& camera, std::span<const Box2D> visible) {
  std::vector<Box3D> out;
  for (const auto& b2 : visible) {
    const SceneInstance* inst = scene.find(b2.instance_id);
    if (!inst) continue;
    Box3D b;
    b.instance_id = inst->id;
    b.cls = inst->cls;
    const RigidTransform cam_from_obj = camera.camera_from_scene * inst->pose;
    b.center = cam_from_obj.translation;
    b.size = inst->size;
    b.rotation = cam_from_obj.rotation;
    const Vec3 heading = cam_from_obj.rotation * Vec3::UnitX();
    b.rotation_y = std::atan2(-heading.z(), heading.x());
    out.push_back(b);
  }
  return out;
}

std::vector<std::uint8_t> remap_semantic(std::span<const std::uint8_t> raster20, const ClassTaxonomy& taxonomy) {
  std::vector<std::uint8_t> out(raster20.size());
  const auto& table = taxonomy.remap13();
  for (std::size_t i = 0; i < raster20.size(); ++i) {
    if (raster20[i] >= kNumClasses20) {
      throw Error(Errc::UnknownClassId, "class id " + std::to_string(raster20[i]) + " at pixel " + std::to_string(i));
    }
    out[i] = static_cast<std::uint8_t>(table[raster20[i]]);
  }
  return out;
}

std::string palette_json(const ClassTaxonomy& taxonomy) {
  json j;
  auto entries = [](const auto& names, const auto& colors) {
    json arr = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
      arr.push_back({{"id", i}, {"name", names[i]}, {"color", {colors[i].r, colors[i].g, colors[i].b}}});
    }
    return arr;
  };
  j["semantic"] = entries(taxonomy.names13(), taxonomy.colors13());
  j["semantic20"] = entries(taxonomy.names20(), taxonomy.colors20());
  return j.dump(1) + "\n";
}

std::string boxes_json(const AnnotationBundle& bundle, const ClassTaxonomy& taxonomy) {
  json j;
  const auto& k = bundle.rig.intrinsics;
  j["image"] = {{"width", bundle.width}, {"height", bundle.height}, {"camera", bundle.rig.name}};
  j["intrinsics"] = {{"fx", quantize9(k.fx)}, {"fy", quantize9(k.fy)}, {"cx", quantize9(k.cx)}, {"cy", quantize9(k.cy)}};
  json b2 = json::array();
  for (const auto& b : bundle.boxes2d) {
    b2.push_back({{"instance_id", b.instance_id},
                  {"class", taxonomy.name(b.cls)},
                  {"class13", taxonomy.name(taxonomy.to13(b.cls))},
                  {"bbox", {b.x_min, b.y_min, b.x_max, b.y_max}},
                  {"visible_pixels", b.visible_pixels}});
  }
  json b3 = json::array();
  for (const auto& b : bundle.boxes3d) {
    b3.push_back({{"instance_id", b.instance_id},
                  {"class", taxonomy.name(b.cls)},
                  {"class13", taxonomy.name(taxonomy.to13(b.cls))},
                  {"center", {quantize9(b.center.x()), quantize9(b.center.y()), quantize9(b.center.z())}},
                  {"size", {quantize9(b.size.x()), quantize9(b.size.y()), quantize9(b.size.z())}},
                  {"rotation_y", quantize9(b.rotation_y)},
                  {"rotation",
                   {quantize9(b.rotation.w()), quantize9(b.rotation.x()), quantize9(b.rotation.y()),
                    quantize9(b.rotation.z())}}});
  }
  j["boxes2d"] = std::move(b2);
  j["boxes3d"] = std::move(b3);
  return j.dump(1) + "\n";
}

std::vector<std::string> write_bundle(const AnnotationBundle& bundle, const std::filesystem::path& dir,
                                      const ClassTaxonomy& taxonomy) {
  const BundlePaths names;
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::vector<std::uint8_t>& bytes) {
    write_binary_file(dir / name, bytes);
    written.push_back(name);
  };
  const int w = bundle.width, h = bundle.height;
  put(names.semantic, encode_png_gray8(w, h, bundle.semantic13));
  put(names.semantic20, encode_png_gray8(w, h, bundle.semantic20));
  put(names.instance, encode_png_gray16(w, h, bundle.instance));
  put(names.depth, encode_pfm(w, h, bundle.depth));
  std::vector<std::uint16_t> normals(bundle.normals.size());
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double v = std::clamp((static_cast<double>(bundle.normals[i]) + 1.0) / 2.0, 0.0, 1.0);
    normals[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  put(names.normals, encode_png_rgb16(w, h, normals));
  if (bundle.flow) put(names.flow, encode_flo(w, h, bundle.flow->uv));
  const std::string boxes = boxes_json(bundle, taxonomy);
  put(names.boxes, {boxes.begin(), boxes.end()});
  const std::string palette = palette_json(taxonomy);
  put(names.palette, {palette.begin(), palette.end()});
  return written;
}

}  // namespace trove
