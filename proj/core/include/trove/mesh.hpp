#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trove/geo.hpp"

namespace trove {

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  bool empty() const { return triangles.empty(); }
  // Appends `other`, re-indexing its triangles.
  void append(const TriangleMesh& other);
  // Signed volume from the tetrahedra each face forms with the origin;
  // positive for closed, outward-wound meshes.
  double signed_volume() const;
  // Sum of triangle areas projected to the XY plane (unsigned).
  double projected_area_xy() const;
  // Every undirected edge shared by exactly two triangles.
  bool is_closed() const;
  // Axis-aligned bounds; zero vectors for an empty mesh.
  std::pair<Vec3, Vec3> bounds() const;

  bool operator==(const TriangleMesh&) const = default;
};

// Box of the given full dimensions centered at the origin.
TriangleMesh box_mesh(const Vec3& dims);

// Ear clipping of a simple CCW polygon; returns index triples into its
// vertex list, all CCW. Throws Error(TriangulationFailure).
std::vector<Triangle> triangulate(const Polygon2& polygon);

// Minimal Wavefront OBJ subset: "v" and "f" records, polygons fanned.
TriangleMesh parse_obj(std::string_view text);
TriangleMesh read_obj(const std::filesystem::path& path);
std::string write_obj(const TriangleMesh& mesh);

}  // namespace trove
