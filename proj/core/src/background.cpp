#include "trove/background.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trove/error.hpp"
#include "trove/raster_io.hpp"
#include "trove/rng.hpp"
#include "trove/taxonomy.hpp"

namespace trove {

double DensityGrid::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double DensityGrid::max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

namespace {

bool qualifies(const LidarPoint& p, bool labeled, const GridConfig& cfg) {
  if (labeled) return p.label == static_cast<int>(Class20::Bushes) || p.label == static_cast<int>(Class20::Trees);
  return p.z >= cfg.min_height && p.z <= cfg.max_height;
}

}  // namespace

DensityGrid vegetation_density(const LidarSweep& sweep, const GridConfig& cfg) {
  if (!(cfg.cell > 0.0)) throw Error(Errc::DegenerateInput, "density grid cell must be positive");
  if (sweep.points.empty()) throw Error(Errc::DegenerateInput, "density grid needs a non-empty sweep");

  Vec2 lo, hi;
  if (cfg.bounds) {
    lo = cfg.bounds->first;
    hi = cfg.bounds->second;
  } else {
    lo = Vec2(sweep.points[0].x, sweep.points[0].y);
    hi = lo;
    for (const auto& p : sweep.points) {
      lo = lo.cwiseMin(Vec2(p.x, p.y));
      hi = hi.cwiseMax(Vec2(p.x, p.y));
    }
    lo = (lo / cfg.cell).array().floor().matrix() * cfg.cell;
    hi = (hi / cfg.cell).array().floor().matrix() * cfg.cell + Vec2::Constant(cfg.cell);
  }
  DensityGrid g;
  g.origin = lo;
  g.cell = cfg.cell;
  g.nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cfg.cell - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cfg.cell - 1e-9)));
  g.values.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);

  const bool labeled = sweep.labeled();
  for (const auto& p : sweep.points) {
    if (!qualifies(p, labeled, cfg)) continue;
    const double fx = (p.x - lo.x()) / cfg.cell;
    const double fy = (p.y - lo.y()) / cfg.cell;
    if (fx < 0 || fy < 0) continue;
    int ix = static_cast<int>(fx);
    int iy = static_cast<int>(fy);
    // points on the closing edge belong to the last cell
    if (ix == g.nx && fx == g.nx) ix = g.nx - 1;
    if (iy == g.ny && fy == g.ny) iy = g.ny - 1;
    if (ix >= g.nx || iy >= g.ny) continue;
    g.at(ix, iy) += 1.0;
  }
  const double m = g.max();
  if (m > 0) {
    for (double& v : g.values) v /= m;
  } else {
    g.all_zero = true;
  }
  return g;
}

bool inside_any_road(const Vec2& p, std::span<const RoadPlan> roads, double margin) {
  for (const auto& road : roads) {
    const auto& vs = road.mesh.vertices;
    for (const auto& t : road.mesh.triangles) {
      const Vec2 a = vs[t[0]].head<2>(), b = vs[t[1]].head<2>(), c = vs[t[2]].head<2>();
      const Vec2 lo = a.cwiseMin(b).cwiseMin(c) - Vec2::Constant(margin);
      const Vec2 hi = a.cwiseMax(b).cwiseMax(c) + Vec2::Constant(margin);
      if (p.x() < lo.x() || p.y() < lo.y() || p.x() > hi.x() || p.y() > hi.y()) continue;
      if (distance_to_triangle(p, a, b, c) <= margin) return true;
    }
  }
  return false;
}

DensityGrid mask_roads(const DensityGrid& grid, std::span<const RoadPlan> roads, double margin) {
  DensityGrid out = grid;
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (out.at(ix, iy) != 0.0 && inside_any_road(grid.cell_center(ix, iy), roads, margin)) out.at(ix, iy) = 0.0;
    }
  }
  return out;
}

std::string_view to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::Tree: return "tree";
    case BackgroundKind::Bush: return "bush";
    case BackgroundKind::Sign: return "sign";
    case BackgroundKind::Pole: return "pole";
  }
  return "tree";
}

std::size_t vegetation_count(const DensityGrid& grid, const VegetationConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.density_coeff * grid.sum()));
}

std::vector<BackgroundInstance> sample_vegetation(const DensityGrid& grid, std::size_t count,
                                                  const AssetCatalog& catalog, std::uint64_t seed,
                                                  const VegetationConfig& cfg) {
  std::vector<BackgroundInstance> out;
  if (count == 0) return out;

  std::vector<double> cumulative(grid.values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    total += std::max(0.0, grid.values[i]);
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw Error(Errc::EmptyDensity, "vegetation density sums to zero");

  auto assets = catalog.by_category(ClassTaxonomy::standard().name(Class20::Trees));
  auto bushes = catalog.by_category(ClassTaxonomy::standard().name(Class20::Bushes));
  assets.insert(assets.end(), bushes.begin(), bushes.end());
  if (assets.empty()) throw Error(Errc::NoAssetForCategory, "catalog has no trees or bushes assets");

  Rng rng = Rng::stream(seed, "vegetation");
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double u = rng.uniform01() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t cell = static_cast<std::size_t>(it - cumulative.begin());
    // guard against u landing on the final boundary through rounding
    if (cell >= cumulative.size()) cell = cumulative.size() - 1;
    while (grid.values[cell] <= 0.0 && cell > 0) --cell;
    const int ix = static_cast<int>(cell % static_cast<std::size_t>(grid.nx));
    const int iy = static_cast<int>(cell / static_cast<std::size_t>(grid.nx));
    const Vec2 corner = grid.origin + Vec2(ix * grid.cell, iy * grid.cell);
    const double jx = rng.uniform(0.0, grid.cell);
    const double jy = rng.uniform(0.0, grid.cell);
    const Asset* asset = assets[rng.index(assets.size())];

    BackgroundInstance inst;
    inst.kind = asset->render_class() == Class20::Bushes ? BackgroundKind::Bush : BackgroundKind::Tree;
    inst.asset_id = asset->asset_id;
    inst.position = Vec3(corner.x() + jx, corner.y() + jy, 0.0);
    inst.scale = rng.uniform(cfg.min_scale, cfg.max_scale);
    inst.yaw = rng.uniform(-kPi, kPi);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<BackgroundInstance> place_roadside(std::span<const SidewalkLine> sidewalks, const AssetCatalog& catalog,
                                               const RoadsideConfig& cfg, std::uint64_t seed) {
  if (!(cfg.spacing > 0.0)) throw Error(Errc::ConfigError, "roadside spacing must be positive");
  std::vector<BackgroundInstance> out;
  const auto signs = catalog.by_category(ClassTaxonomy::standard().name(Class20::TrafficSign));
  const auto poles = catalog.by_category(kPoleCategory);
  if (signs.empty() && poles.empty()) return out;

  for (std::size_t li = 0; li < sidewalks.size(); ++li) {
    const auto& line = sidewalks[li];
    if (line.points.size() < 2 || polyline_length(line.points) <= 0.0) continue;
    Rng rng = Rng::stream(seed, "roadside/" + std::to_string(li));

    std::size_t seg = 0;
    double seg_start = 0.0;
    double s = rng.exponential(cfg.spacing);
    while (true) {
      // advance to the segment containing arc length s
      while (seg + 1 < line.points.size() &&
             s > seg_start + (line.points[seg + 1] - line.points[seg]).norm()) {
        seg_start += (line.points[seg + 1] - line.points[seg]).norm();
        ++seg;
      }
      if (seg + 1 >= line.points.size()) break;
      const Vec2 a = line.points[seg];
      const Vec2 b = line.points[seg + 1];
      const double len = (b - a).norm();
      if (len <= 0.0) {
        ++seg;
        continue;
      }
      const Vec2 t = (b - a) / len;
      const Vec2 left(-t.y(), t.x());
      // road on the right (or unknown) puts furniture on the left
      const Vec2 away = line.road_side == RoadSide::Left ? Vec2(-left) : left;
      const Vec2 base = a + t * (s - seg_start);
      const Vec2 pos = base + away * cfg.offset;

      const bool want_sign = rng.bernoulli(0.5);
      const auto& pool = (want_sign && !signs.empty()) || poles.empty() ? signs : poles;
      const Asset* asset = pool[rng.index(pool.size())];
      const double scale = rng.uniform(cfg.min_scale, cfg.max_scale);

      if (distance_to_polyline(pos, line.points) >= cfg.offset - 1e-6) {
        BackgroundInstance inst;
        inst.kind = &pool == &signs ? BackgroundKind::Sign : BackgroundKind::Pole;
        inst.asset_id = asset->asset_id;
        inst.position = Vec3(pos.x(), pos.y(), 0.0);
        inst.yaw = std::atan2(-away.y(), -away.x());
        inst.scale = scale;
        out.push_back(std::move(inst));
      }
      s += rng.exponential(cfg.spacing);
    }
  }
  return out;
}

std::vector<std::uint8_t> density_png(const DensityGrid& grid) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(grid.nx) * grid.ny);
  for (int row = 0; row < grid.ny; ++row) {
    const int iy = grid.ny - 1 - row;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double v = std::clamp(grid.at(ix, iy), 0.0, 1.0);
      px[static_cast<std::size_t>(row) * grid.nx + ix] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return encode_png_gray8(grid.nx, grid.ny, px);
}

std::string density_sidecar(const DensityGrid& grid) {
  std::ostringstream out;
  out.precision(9);
  out << "origin_x " << grid.origin.x() << "\n"
      << "origin_y " << grid.origin.y() << "\n"
      << "cell " << grid.cell << "\n"
      << "nx " << grid.nx << "\n"
      << "ny " << grid.ny << "\n"
      << "all_zero " << (grid.all_zero ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace trove
