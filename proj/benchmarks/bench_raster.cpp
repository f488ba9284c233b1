#include <benchmark/benchmark.h>

#include <filesystem>

#include "fixture.hpp"
#include "trove/annotate.hpp"
#include "trove/pipeline.hpp"

namespace {

using namespace trove;

struct FixtureScene {
  SceneGraph graph;
  RenderScene render;

  static const FixtureScene& get() {
    static const FixtureScene s = [] {
      const auto root = std::filesystem::temp_directory_path() / "trove_bench_raster";
      std::filesystem::remove_all(root);
      const auto paths = fixture::write_fixture(root);
      const auto cfg = load_pipeline_config(paths.config);
      const auto cat = load_catalog(paths.catalog);
      auto built = build_scene(cfg, std::string(fixture::kSceneId), cat, ClassTaxonomy::standard());
      FixtureScene out;
      out.render = prepare_render_scene(built.graph, load_instance_meshes(built.graph, cat));
      out.graph = std::move(built.graph);
      std::filesystem::remove_all(root);
      return out;
    }();
    return s;
  }
};

void BM_Rasterize(benchmark::State& state) {
  const auto& s = FixtureScene::get();
  RasterOptions opts;
  opts.width = static_cast<int>(state.range(0));
  opts.height = opts.width * 9 / 16;
  opts.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(s.render, s.graph, s.graph.cameras[0], opts));
  state.counters["triangles"] = static_cast<double>(s.render.triangles.size());
}
BENCHMARK(BM_Rasterize)->Args({800, 1})->Args({1600, 1})->Args({1600, 4})->Unit(benchmark::kMillisecond);

void BM_Flow(benchmark::State& state) {
  const auto& s = FixtureScene::get();
  RasterOptions opts;
  const auto frame = rasterize(s.render, s.graph, s.graph.cameras[0], opts);
  std::map<std::uint32_t, RigidTransform> motions;
  for (const auto& inst : s.graph.instances) motions[inst.id] = RigidTransform::identity();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_flow(s.graph, s.graph.cameras[0], s.graph.cameras[1], motions, frame));
  }
}
BENCHMARK(BM_Flow)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
