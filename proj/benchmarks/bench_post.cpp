#include <benchmark/benchmark.h>

#include "trove/post.hpp"
#include "trove/rng.hpp"

namespace {

using namespace trove;

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(256));
  return img;
}

void BM_LabStats(benchmark::State& state) {
  const auto img = noise_image(1600, 900, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lab_stats(img));
}
BENCHMARK(BM_LabStats)->Unit(benchmark::kMillisecond);

void BM_ColorTransfer(benchmark::State& state) {
  const auto src = noise_image(1600, 900, 2);
  const auto tgt = lab_stats(noise_image(320, 180, 3));
  for (auto _ : state) benchmark::DoNotOptimize(quantize(color_transfer(src, tgt, 0.8)));
}
BENCHMARK(BM_ColorTransfer)->Unit(benchmark::kMillisecond);

void BM_Curate(benchmark::State& state) {
  Rng rng(4);
  std::vector<std::vector<std::uint8_t>> rasters(20, std::vector<std::uint8_t>(1600 * 900));
  for (auto& r : rasters)
    for (auto& v : r) v = static_cast<std::uint8_t>(rng.index(kNumClasses13));
  std::vector<SemanticSample> samples;
  for (std::size_t i = 0; i < rasters.size(); ++i) samples.push_back({std::to_string(i), rasters[i]});
  for (auto _ : state) benchmark::DoNotOptimize(curate(samples));
}
BENCHMARK(BM_Curate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
