#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "trove/annotate.hpp"
#include "trove/geo.hpp"
#include "trove/rng.hpp"

namespace trove::test {

// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("trove_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Area of intersection over union of two oriented boxes by uniform sampling
// of the bounding square of both.
inline double monte_carlo_iou(const OrientedBox2& a, const OrientedBox2& b, std::size_t samples, Rng& rng) {
  auto inside = [](const OrientedBox2& box, const Vec2& p) {
    const Vec2 d = p - box.center;
    const double c = std::cos(box.yaw), s = std::sin(box.yaw);
    const double u = c * d.x() + s * d.y();
    const double v = -s * d.x() + c * d.y();
    return std::abs(u) <= box.half_extents.x() && std::abs(v) <= box.half_extents.y();
  };
  const double ra = a.half_extents.norm(), rb = b.half_extents.norm();
  const double x0 = std::min(a.center.x() - ra, b.center.x() - rb);
  const double x1 = std::max(a.center.x() + ra, b.center.x() + rb);
  const double y0 = std::min(a.center.y() - ra, b.center.y() - rb);
  const double y1 = std::max(a.center.y() + ra, b.center.y() + rb);
  std::size_t in_a = 0, in_b = 0, both = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec2 p(rng.uniform(x0, x1), rng.uniform(y0, y1));
    const bool ia = inside(a, p), ib = inside(b, p);
    in_a += ia;
    in_b += ib;
    both += ia && ib;
  }
  const double uni = static_cast<double>(in_a + in_b - both);
  return uni > 0 ? static_cast<double>(both) / uni : 0.0;
}

// Pinhole rig looking down the scene +z axis from the origin, so camera and
// scene coordinates coincide.
inline CameraSample identity_camera(int width, int height, double f, double cx, double cy) {
  CameraSample s;
  s.rig.name = "test";
  s.rig.intrinsics = {f, f, cx, cy};
  s.rig.width = width;
  s.rig.height = height;
  s.camera_from_scene = RigidTransform::identity();
  s.source = EgoClone{0};
  return s;
}

// Appends an axis-aligned quad in the plane z = `z` spanning [x0,x1]x[y0,y1].
inline void add_quad(RenderScene& r, double x0, double y0, double x1, double y1, double z, std::uint32_t instance,
                     Class20 cls) {
  const auto base = static_cast<std::uint32_t>(r.vertices.size());
  r.vertices.push_back({x0, y0, z});
  r.vertices.push_back({x1, y0, z});
  r.vertices.push_back({x1, y1, z});
  r.vertices.push_back({x0, y1, z});
  r.triangles.push_back({{base, base + 1, base + 2}, instance, cls});
  r.triangles.push_back({{base, base + 2, base + 3}, instance, cls});
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace trove::test
