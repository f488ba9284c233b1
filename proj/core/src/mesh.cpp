#include "trove/mesh.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "trove/error.hpp"

namespace trove {

void TriangleMesh::append(const TriangleMesh& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  triangles.reserve(triangles.size() + other.triangles.size());
  for (const auto& t : other.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

double TriangleMesh::signed_volume() const {
  double v = 0;
  for (const auto& t : triangles) {
    v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
  }
  return v / 6.0;
}

double TriangleMesh::projected_area_xy() const {
  double a = 0;
  for (const auto& t : triangles) {
    const Vec2 p0 = vertices[t[0]].head<2>(), p1 = vertices[t[1]].head<2>(),
               p2 = vertices[t[2]].head<2>();
    a += 0.5 * std::abs(cross2(p1 - p0, p2 - p0));
  }
  return a;
}

bool TriangleMesh::is_closed() const {
  if (triangles.empty()) return false;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      auto a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  for (const auto& [e, n] : edges) {
    if (n != 2) return false;
  }
  return true;
}

std::pair<Vec3, Vec3> TriangleMesh::bounds() const {
  if (vertices.empty()) return {Vec3::Zero(), Vec3::Zero()};
  Vec3 lo = vertices.front(), hi = vertices.front();
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

TriangleMesh box_mesh(const Vec3& dims) {
  const Vec3 h = dims / 2.0;
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                            (i & 4) ? h.z() : -h.z());
  }
  // outward winding
  m.triangles = {{0, 2, 3}, {0, 3, 1},   // -z
                 {4, 5, 7}, {4, 7, 6},   // +z
                 {0, 1, 5}, {0, 5, 4},   // -y
                 {2, 6, 7}, {2, 7, 3},   // +y
                 {0, 4, 6}, {0, 6, 2},   // -x
                 {1, 3, 7}, {1, 7, 5}};  // +x
  return m;
}

std::vector<Triangle> triangulate(const Polygon2& polygon) {
  const auto& v = polygon.vertices();
  std::vector<std::uint32_t> idx(v.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Triangle> out;
  out.reserve(v.size() - 2);

  auto is_ear = [&](std::size_t i) {
    const std::size_t n = idx.size();
    const Vec2& a = v[idx[(i + n - 1) % n]];
    const Vec2& b = v[idx[i]];
    const Vec2& c = v[idx[(i + 1) % n]];
    if (cross2(b - a, c - b) <= 0) return false;  // reflex or flat
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || j == (i + n - 1) % n || j == (i + 1) % n) continue;
      const Vec2& p = v[idx[j]];
      if (p == a || p == b || p == c) continue;
      if (point_in_triangle(p, a, b, c)) return false;
    }
    return true;
  };

  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (!is_ear(i)) continue;
      const std::size_t n = idx.size();
      out.push_back({idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // only collinear runs left: drop a flat vertex and continue
      bool dropped = false;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t n = idx.size();
        const Vec2& a = v[idx[(i + n - 1) % n]];
        const Vec2& b = v[idx[i]];
        const Vec2& c = v[idx[(i + 1) % n]];
        if (std::abs(cross2(b - a, c - b)) <= kMinArea) {
          idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
          dropped = true;
          break;
        }
      }
      if (!dropped) throw Error(Errc::TriangulationFailure, "no ear found; footprint is not simple");
    }
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh m;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
        throw Error(Errc::MeshLoadFailure, "bad vertex on OBJ line " + std::to_string(lineno));
      }
      m.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> face;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        long long i = 0;
        auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), i);
        if (ec != std::errc() || i == 0) {
          throw Error(Errc::MeshLoadFailure, "bad face index on OBJ line " + std::to_string(lineno));
        }
        const long long n = static_cast<long long>(m.vertices.size());
        const long long resolved = i > 0 ? i - 1 : n + i;
        if (resolved < 0 || resolved >= n) {
          throw Error(Errc::MeshLoadFailure, "face index out of range on OBJ line " + std::to_string(lineno));
        }
        face.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (face.size() < 3) throw Error(Errc::MeshLoadFailure, "face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < face.size(); ++k) m.triangles.push_back({face[0], face[k], face[k + 1]});
    }
  }
  return m;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::MeshLoadFailure, "cannot open mesh '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_obj(ss.str());
}

std::string write_obj(const TriangleMesh& mesh) {
  std::string out;
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

}  // namespace trove
