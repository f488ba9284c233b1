#include <benchmark/benchmark.h>

#include "fixture.hpp"
#include "trove/background.hpp"
#include "trove/layout.hpp"
#include "trove/placement.hpp"
#include "trove/rng.hpp"

namespace {

using namespace trove;

void BM_Iou3d(benchmark::State& state) {
  Rng rng(1);
  std::vector<ObjectBox> queries(256);
  std::vector<Vec3> assets(256);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    queries[i].size = Vec3(rng.uniform(1, 12), rng.uniform(0.5, 4), rng.uniform(0.5, 4));
    queries[i].yaw = rng.uniform(-kPi, kPi);
    assets[i] = Vec3(rng.uniform(1, 12), rng.uniform(0.5, 4), rng.uniform(0.5, 4));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou3d(queries[i & 255], assets[(i * 7) & 255]));
    ++i;
  }
}
BENCHMARK(BM_Iou3d);

void BM_MatchAssets(benchmark::State& state) {
  const auto rec = fixture::fixture_record();
  const auto cat = fixture::fixture_catalog();
  for (auto _ : state) benchmark::DoNotOptimize(match_assets(rec.objects, cat, 3, 42));
}
BENCHMARK(BM_MatchAssets);

void BM_ClassifyBuilding(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n, r = i % 2 ? 8.0 : 14.0;
    pts.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  const auto poly = Polygon2::from_points(pts);
  for (auto _ : state) benchmark::DoNotOptimize(classify_building(poly));
}
BENCHMARK(BM_ClassifyBuilding)->Arg(4)->Arg(16)->Arg(128);

void BM_ParseOsm(benchmark::State& state) {
  const auto rec = fixture::fixture_record();
  const std::string xml = fixture::fixture_osm(rec.origin);
  for (auto _ : state) benchmark::DoNotOptimize(parse_osm(xml, rec.origin));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * xml.size()));
}
BENCHMARK(BM_ParseOsm);

void BM_VegetationDensity(benchmark::State& state) {
  const auto rec = fixture::fixture_record();
  LidarSweep merged;
  for (const auto& s : rec.sweeps) merged.points.insert(merged.points.end(), s.points.begin(), s.points.end());
  for (auto _ : state) benchmark::DoNotOptimize(vegetation_density(merged));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * merged.points.size()));
}
BENCHMARK(BM_VegetationDensity);

void BM_SampleVegetation(benchmark::State& state) {
  DensityGrid g;
  g.origin = Vec2(0, 0);
  g.cell = 1.0;
  g.nx = 200;
  g.ny = 200;
  Rng rng(3);
  for (int i = 0; i < g.nx * g.ny; ++i) g.values.push_back(rng.uniform01());
  const auto cat = fixture::fixture_catalog();
  const auto count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_vegetation(g, count, cat, 9));
}
BENCHMARK(BM_SampleVegetation)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
