#include "trove/layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "trove/error.hpp"

namespace trove {

// ---------------------------------------------------------------------------
// buildings

int OrientationHistogram::bin_of(double orientation) const {
  const int b = static_cast<int>(std::floor(wrap_orientation(orientation) / bin_width()));
  return std::clamp(b, 0, bins() - 1);
}

double OrientationHistogram::total() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

OrientationHistogram orientation_histogram(const Polygon2& footprint, int bins) {
  if (bins < 8) throw Error(Errc::DegenerateInput, "orientation histogram needs >= 8 bins");
  OrientationHistogram h;
  h.weights.assign(static_cast<std::size_t>(bins), 0.0);
  const auto& v = footprint.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 d = v[(i + 1) % v.size()] - v[i];
    h.weights[static_cast<std::size_t>(h.bin_of(std::atan2(d.y(), d.x())))] += d.norm();
  }
  return h;
}

namespace {

// Weight of a direction: its bin plus both circular neighbours, so parallel
// edges split across a bin boundary by noise still count together.
double window_weight(const OrientationHistogram& h, int i) {
  const int n = h.bins();
  return h.weights[static_cast<std::size_t>((i + n - 1) % n)] + h.weights[static_cast<std::size_t>(i)] +
         h.weights[static_cast<std::size_t>((i + 1) % n)];
}

bool in_window(const OrientationHistogram& h, int center, int bin) {
  const int n = h.bins();
  const int d = std::abs(bin - center);
  return std::min(d, n - d) <= 1;
}

}  // namespace

BuildingClass classify_building(const Polygon2& footprint, const LayoutConfig& cfg) {
  const auto hist = orientation_histogram(footprint, cfg.histogram_bins);
  const int n = hist.bins();
  const double half_turn = n / 2.0;

  int best_i = -1, best_j = -1;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int d = j - i;
      const int sep = std::min(d, n - d);
      if (std::abs(sep - half_turn) > cfg.perp_tol_bins) continue;
      const double w = window_weight(hist, i) + window_weight(hist, j);
      if (w > best) {  // strict: ties keep the lower orientation
        best = w;
        best_i = i;
        best_j = j;
      }
    }
  }
  const double perimeter = footprint.perimeter();
  if (best_i < 0 || best < cfg.dominance * perimeter) return FacadeTexture{};
  if (cfg.use_area_ratio) {
    const double hull = polygon_area(convex_hull(footprint.vertices()));
    if (polygon_area(footprint) / hull < cfg.rect_ratio) return FacadeTexture{};
  }

  const int heavy = window_weight(hist, best_j) > window_weight(hist, best_i) ? best_j : best_i;
  const double center_angle = (heavy + 0.5) * hist.bin_width();

  // length-weighted mean orientation of the edges in the heavier window,
  // each unwrapped to the representative closest to the window center
  const auto& v = footprint.vertices();
  double sum = 0, wsum = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec2 d = v[(k + 1) % v.size()] - v[k];
    const double theta = std::atan2(d.y(), d.x());
    if (!in_window(hist, heavy, hist.bin_of(theta))) continue;
    double t = wrap_orientation(theta);
    t += kPi * std::round((center_angle - t) / kPi);
    sum += d.norm() * t;
    wsum += d.norm();
  }
  RectReplace r;
  r.yaw = wrap_orientation(sum / wsum);

  const Vec2 u(std::cos(r.yaw), std::sin(r.yaw));
  const Vec2 w(-u.y(), u.x());
  double umin = INFINITY, umax = -INFINITY, wmin = INFINITY, wmax = -INFINITY;
  for (const auto& p : v) {
    umin = std::min(umin, p.dot(u));
    umax = std::max(umax, p.dot(u));
    wmin = std::min(wmin, p.dot(w));
    wmax = std::max(wmax, p.dot(w));
  }
  r.extents = {umax - umin, wmax - wmin};
  r.center = u * (0.5 * (umin + umax)) + w * (0.5 * (wmin + wmax));
  return r;
}

double building_height(const OsmBuilding& b, const LayoutConfig& cfg) {
  if (b.height && *b.height > 0) return *b.height;
  if (b.levels && *b.levels > 0) return *b.levels * cfg.meters_per_level;
  return cfg.default_height;
}

BuildingPlan plan_building(const OsmBuilding& b, const LayoutConfig& cfg) {
  return BuildingPlan{b.id, b.footprint, classify_building(b.footprint, cfg), building_height(b, cfg)};
}

TriangleMesh extrude_building(const BuildingPlan& plan) {
  const auto& v = plan.footprint.vertices();
  const auto n = static_cast<std::uint32_t>(v.size());
  TriangleMesh m;
  m.vertices.reserve(2 * n);
  for (const auto& p : v) m.vertices.emplace_back(p.x(), p.y(), 0.0);
  for (const auto& p : v) m.vertices.emplace_back(p.x(), p.y(), plan.height);
  for (const auto& t : triangulate(plan.footprint)) {
    m.triangles.push_back({t[0], t[2], t[1]});              // floor faces down
    m.triangles.push_back({t[0] + n, t[1] + n, t[2] + n});  // roof faces up
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    m.triangles.push_back({i, j, j + n});
    m.triangles.push_back({i, j + n, i + n});
  }
  return m;
}

// ---------------------------------------------------------------------------
// roads

namespace {

std::vector<Vec2> dedupe(std::span<const Vec2> line) {
  std::vector<Vec2> out;
  for (const auto& p : line) {
    if (out.empty() || (p - out.back()).norm() > kClipEpsilon) out.push_back(p);
  }
  return out;
}

Vec2 left_normal(const Vec2& a, const Vec2& b) {
  const Vec2 d = (b - a).normalized();
  return {-d.y(), d.x()};
}

// Left offsets of each vertex at unit half-width, mitered at interior vertices.
std::vector<Vec2> miter_offsets(const std::vector<Vec2>& pts, double miter_limit) {
  const std::size_t n = pts.size();
  std::vector<Vec2> off(n);
  off[0] = left_normal(pts[0], pts[1]);
  off[n - 1] = left_normal(pts[n - 2], pts[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 n1 = left_normal(pts[i - 1], pts[i]);
    const Vec2 n2 = left_normal(pts[i], pts[i + 1]);
    const Vec2 sum = n1 + n2;
    if (sum.norm() < 1e-9) {
      off[i] = n1;
      continue;
    }
    const Vec2 m = sum.normalized();
    const double len = std::min(1.0 / m.dot(n1), miter_limit);
    off[i] = m * len;
  }
  return off;
}

}  // namespace

std::vector<Vec2> offset_polyline(std::span<const Vec2> line, double distance) {
  const auto pts = dedupe(line);
  if (pts.size() < 2) return {};
  const auto off = miter_offsets(pts, 4.0);
  std::vector<Vec2> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = pts[i] + off[i] * distance;
  return out;
}

TriangleMesh ribbon_mesh(std::span<const Vec2> line, double width, double z, double miter_limit) {
  const auto pts = dedupe(line);
  TriangleMesh m;
  if (pts.size() < 2) return m;
  const auto off = miter_offsets(pts, miter_limit);
  const double h = width / 2.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 l = pts[i] + off[i] * h;
    const Vec2 r = pts[i] - off[i] * h;
    m.vertices.emplace_back(l.x(), l.y(), z);
    m.vertices.emplace_back(r.x(), r.y(), z);
  }
  for (std::uint32_t i = 0; i + 1 < pts.size(); ++i) {
    const std::uint32_t l0 = 2 * i, r0 = 2 * i + 1, l1 = 2 * i + 2, r1 = 2 * i + 3;
    m.triangles.push_back({l0, r0, r1});
    m.triangles.push_back({l0, r1, l1});
  }
  return m;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct Endpoint {
  std::size_t road;
  bool at_start;
};

void weld_vertices(TriangleMesh& m) {
  std::map<std::tuple<double, double, double>, std::uint32_t> index;
  std::vector<Vec3> verts;
  std::vector<std::uint32_t> remap(m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    const auto& v = m.vertices[i];
    auto key = std::make_tuple(v.x(), v.y(), v.z());
    auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(verts.size()));
    if (inserted) verts.push_back(v);
    remap[i] = it->second;
  }
  for (auto& t : m.triangles) {
    for (auto& k : t) k = remap[k];
  }
  m.vertices = std::move(verts);
}

}  // namespace

RoadNetwork build_road_network(std::span<const OsmRoad> roads, std::span<const double> widths,
                               const RoadNetworkConfig& cfg) {
  if (widths.size() != roads.size()) throw Error(Errc::DegenerateInput, "one width per road required");
  RoadNetwork net;
  std::vector<std::vector<Vec2>> lines;
  for (const auto& r : roads) lines.push_back(dedupe(r.centerline));

  // weld endpoints across ways
  std::vector<Endpoint> ends;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() < 2) continue;
    ends.push_back({i, true});
    ends.push_back({i, false});
  }
  auto point_of = [&](const Endpoint& e) -> Vec2& {
    return e.at_start ? lines[e.road].front() : lines[e.road].back();
  };
  UnionFind uf(ends.size());
  for (std::size_t a = 0; a < ends.size(); ++a) {
    for (std::size_t b = a + 1; b < ends.size(); ++b) {
      if (ends[a].road == ends[b].road) continue;
      if ((point_of(ends[a]) - point_of(ends[b])).norm() <= cfg.weld_distance) uf.unite(a, b);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t a = 0; a < ends.size(); ++a) clusters[uf.find(a)].push_back(a);
  std::vector<std::pair<Vec2, std::vector<std::size_t>>> junctions;
  for (auto& [root, members] : clusters) {
    if (members.size() < 2) continue;
    Vec2 c = Vec2::Zero();
    for (auto m : members) c += point_of(ends[m]);
    c /= static_cast<double>(members.size());
    for (auto m : members) point_of(ends[m]) = c;
    junctions.emplace_back(c, members);
  }

  for (std::size_t i = 0; i < roads.size(); ++i) {
    RoadPlan p;
    p.source_id = roads[i].id;
    p.highway_class = roads[i].highway_class;
    p.centerline = lines[i];
    p.width = widths[i];
    p.mesh = ribbon_mesh(lines[i], widths[i], cfg.surface_z, cfg.miter_limit);
    net.joint_mesh.append(p.mesh);
    net.plans.push_back(std::move(p));
  }

  // junction fans close the gaps between ribbon ends meeting at a node
  for (const auto& [center, members] : junctions) {
    std::vector<Vec2> corners;
    for (auto m : members) {
      const auto& e = ends[m];
      const auto& line = lines[e.road];
      if (line.size() < 2) continue;
      const auto off = miter_offsets(line, cfg.miter_limit);
      const std::size_t k = e.at_start ? 0 : line.size() - 1;
      const double h = widths[e.road] / 2.0;
      corners.push_back(line[k] + off[k] * h);
      corners.push_back(line[k] - off[k] * h);
    }
    std::sort(corners.begin(), corners.end(), [&](const Vec2& a, const Vec2& b) {
      return std::atan2(a.y() - center.y(), a.x() - center.x()) <
             std::atan2(b.y() - center.y(), b.x() - center.x());
    });
    TriangleMesh fan;
    fan.vertices.emplace_back(center.x(), center.y(), cfg.surface_z);
    for (const auto& c : corners) fan.vertices.emplace_back(c.x(), c.y(), cfg.surface_z);
    const auto nc = static_cast<std::uint32_t>(corners.size());
    for (std::uint32_t k = 0; k < nc; ++k) {
      const std::uint32_t a = k + 1, b = (k + 1) % nc + 1;
      const double area = cross2(corners[k] - center, corners[(k + 1) % nc] - center);
      if (area > 1e-9) fan.triangles.push_back({0, a, b});
    }
    net.joint_mesh.append(fan);
  }
  weld_vertices(net.joint_mesh);
  return net;
}

double default_road_width(std::string_view cls) {
  static const std::map<std::string_view, double> table = {
      {"motorway", 14.0},    {"trunk", 12.0},       {"primary", 10.0},       {"secondary", 8.0},
      {"tertiary", 7.0},     {"residential", 6.0},  {"unclassified", 5.0},   {"living_street", 5.0},
      {"service", 4.0},      {"motorway_link", 6.0}, {"trunk_link", 6.0},    {"primary_link", 6.0},
      {"secondary_link", 6.0}, {"tertiary_link", 6.0}, {"track", 3.0},
  };
  auto it = table.find(cls);
  return it == table.end() ? 6.0 : it->second;
}

double fit_road_width(std::span<const Vec2> centerline, std::string_view highway_class,
                      const LidarSweep& sweep, const RoadWidthConfig& cfg, std::optional<double> fallback) {
  const double fb = std::clamp(fallback.value_or(default_road_width(highway_class)), cfg.min_width, cfg.max_width);
  const auto line = dedupe(centerline);
  if (line.size() < 2 || sweep.points.empty()) return fb;
  const bool labeled = sweep.labeled();

  std::vector<double> offsets;
  for (const auto& pt : sweep.points) {
    if (labeled ? pt.label != static_cast<std::int8_t>(Class20::Road) : std::abs(pt.z) > cfg.ground_band) continue;
    const Vec2 p(pt.x, pt.y);
    // nearest segment whose perpendicular foot lies on it
    double best = INFINITY;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const Vec2 ab = line[i + 1] - line[i];
      const double t = (p - line[i]).dot(ab) / ab.squaredNorm();
      if (t < 0.0 || t > 1.0) continue;
      best = std::min(best, std::abs(cross2(ab.normalized(), p - line[i])));
    }
    if (best <= cfg.corridor_half_width) offsets.push_back(best);
  }
  if (offsets.size() < cfg.min_points) return fb;
  std::sort(offsets.begin(), offsets.end());
  // linear interpolation between closest ranks
  const double pos = cfg.percentile * static_cast<double>(offsets.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, offsets.size() - 1);
  const double q = offsets[lo] + (offsets[hi] - offsets[lo]) * (pos - static_cast<double>(lo));
  return std::clamp(2.0 * q, cfg.min_width, cfg.max_width);
}

}  // namespace trove
