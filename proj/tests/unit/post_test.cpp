#include <gtest/gtest.h>

#include <algorithm>

#include "test_support.hpp"
#include "trove/error.hpp"
#include "trove/post.hpp"

namespace trove {
namespace {

RgbImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img{w, h, {}};
  for (int i = 0; i < w * h; ++i) img.pixels.insert(img.pixels.end(), {r, g, b});
  return img;
}

// Smooth, mid-range image so transferred colors stay inside the sRGB gamut.
RgbImage gradient(int w, int h, Vec3 base, Vec3 span, Rng& rng) {
  RgbImage img{w, h, {}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = static_cast<double>(x) / w, t = static_cast<double>(y) / h;
      const Vec3 c = base + span.cwiseProduct(Vec3(s, t, 0.5 * (s + t))) + Vec3::Constant(rng.uniform(-4, 4));
      for (int k = 0; k < 3; ++k) img.pixels.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(c[k]), 0L, 255L)));
    }
  }
  return img;
}

TEST(Lab, WhiteAndGray) {
  const auto white = lab_stats(solid(4, 4, 255, 255, 255));
  EXPECT_NEAR(white.mean.x(), 100.0, 1e-6);
  EXPECT_NEAR(white.mean.y(), 0.0, 1e-4);
  EXPECT_NEAR(white.mean.z(), 0.0, 1e-4);
  EXPECT_EQ(white.std, Vec3::Zero());
  // sRGB 119: linear ((119/255 + 0.055)/1.055)^2.4; L* = 116 Y^(1/3) - 16
  const double lin = std::pow((119.0 / 255.0 + 0.055) / 1.055, 2.4);
  EXPECT_NEAR(lin, 0.1845, 1e-4);
  const double l_expect = 116.0 * std::cbrt(lin) - 16.0;
  const auto gray = lab_stats(solid(3, 3, 119, 119, 119));
  EXPECT_NEAR(gray.mean.x(), l_expect, 1e-6);
  EXPECT_NEAR(gray.mean.x(), 50.03, 0.01);
  EXPECT_NEAR(gray.mean.y(), 0.0, 1e-4);
  EXPECT_NEAR(gray.mean.z(), 0.0, 1e-4);
}

TEST(Lab, TwoToneHasSpread) {
  auto img = solid(2, 1, 10, 10, 10);
  img.pixels[3] = img.pixels[4] = img.pixels[5] = 240;
  EXPECT_GT(lab_stats(img).std.x(), 10.0);
}

TEST(Lab, EmptyImage) {
  try {
    lab_stats(RgbImage{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyImage);
  }
}

TEST(Lab, RoundTripSampledColors) {
  Rng rng(11);
  for (int i = 0; i < 100000; ++i) {
    const Vec3 c(rng.index(256), rng.index(256), rng.index(256));
    const Vec3 back = lab_to_srgb(srgb_to_lab(c / 255.0)) * 255.0;
    ASSERT_LE((back - c).cwiseAbs().maxCoeff(), 1.0) << c.transpose();
    ASSERT_LE((back - c).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Transfer, AlphaZeroIdentity) {
  Rng rng(2);
  const auto src = gradient(64, 48, Vec3(40, 60, 90), Vec3(120, 80, 60), rng);
  const auto tgt = lab_stats(gradient(32, 32, Vec3(120, 100, 60), Vec3(50, 60, 40), rng));
  EXPECT_EQ(quantize(color_transfer(src, tgt, 0.0)).pixels, src.pixels);
  const auto f = color_transfer(src, tgt, 0.0);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) EXPECT_EQ(f.pixels[i], static_cast<float>(src.pixels[i] / 255.0));
}

TEST(Transfer, AlphaOneMatchesTarget) {
  Rng rng(3);
  const auto src = gradient(96, 64, Vec3(60, 70, 80), Vec3(90, 70, 60), rng);
  const auto tgt = lab_stats(gradient(80, 60, Vec3(110, 90, 70), Vec3(60, 60, 50), rng));
  const auto out = lab_stats(color_transfer(src, tgt, 1.0));
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(out.mean[c], tgt.mean[c], 1e-3);
    EXPECT_NEAR(out.std[c], tgt.std[c], 1e-3);
  }
}

TEST(Transfer, PartialBlend) {
  Rng rng(4);
  const auto src = gradient(64, 64, Vec3(60, 70, 80), Vec3(90, 70, 60), rng);
  const auto s = lab_stats(src);
  const auto tgt = lab_stats(gradient(64, 64, Vec3(110, 90, 70), Vec3(60, 60, 50), rng));
  const auto out = lab_stats(color_transfer(src, tgt, 0.8));
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(out.mean[c], 0.2 * s.mean[c] + 0.8 * tgt.mean[c], 1e-3);
    EXPECT_NEAR(out.std[c], 0.2 * s.std[c] + 0.8 * tgt.std[c], 1e-3);
  }
}

TEST(Transfer, ConstantSourceSnapsToTargetMean) {
  LabStats tgt;
  tgt.mean = srgb_to_lab(Vec3(0.4, 0.5, 0.3));
  tgt.std = Vec3(5, 3, 2);
  const auto out = quantize(color_transfer(solid(8, 8, 200, 20, 20), tgt, 1.0));
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    EXPECT_EQ(out.pixels[i], 102);
    EXPECT_EQ(out.pixels[i + 1], 128);
    EXPECT_EQ(out.pixels[i + 2], 77);
  }
}

TEST(Transfer, Idempotent) {
  Rng rng(5);
  const auto src = gradient(64, 48, Vec3(20, 40, 120), Vec3(200, 150, 100), rng);
  const auto tgt = lab_stats(gradient(40, 40, Vec3(150, 120, 20), Vec3(100, 80, 200), rng));
  const auto once = quantize(color_transfer(src, tgt, 1.0));
  const auto twice = quantize(color_transfer(once, tgt, 1.0));
  for (std::size_t i = 0; i < once.pixels.size(); ++i) {
    EXPECT_LE(std::abs(int(once.pixels[i]) - int(twice.pixels[i])), 1) << i;
  }
}

TEST(Transfer, StatsJsonRoundTrip) {
  LabStats s;
  s.mean = Vec3(51.25, -3.5, 7.125);
  s.std = Vec3(10, 2.5, 0.75);
  const auto back = parse_lab_stats(lab_stats_json(s));
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.std, s.std);
  EXPECT_THROW(parse_lab_stats("{\"mean\": [1, 2]}"), Error);
}

TEST(Transfer, PngIo) {
  test::TempDir dir("post");
  Rng rng(6);
  const auto img = gradient(20, 10, Vec3(10, 20, 30), Vec3(200, 200, 200), rng);
  write_rgb_png(dir / "a.png", img);
  const auto back = read_rgb_png(dir / "a.png");
  EXPECT_EQ(back.width, 20);
  EXPECT_EQ(back.pixels, img.pixels);
}

// 100 x 100 raster with the given per-class pixel counts; the remainder is void.
std::vector<std::uint8_t> raster_with(std::initializer_list<std::pair<Class13, std::size_t>> counts) {
  std::vector<std::uint8_t> r;
  for (auto [c, n] : counts) r.insert(r.end(), n, static_cast<std::uint8_t>(c));
  r.resize(10000, static_cast<std::uint8_t>(Class13::Void));
  return r;
}

TEST(Curation, HandCountedFixtures) {
  // 8 classes at 1000 pixels each
  const auto eight = raster_with({{Class13::Car, 1000}, {Class13::Bus, 1000}, {Class13::Truck, 1000},
                                  {Class13::Person, 1000}, {Class13::Road, 1000}, {Class13::Sidewalk, 1000},
                                  {Class13::Building, 1000}, {Class13::Sky, 2000}});
  // 7 classes, two of them below the 0.1% floor (9 of 10000 pixels)
  const auto seven = raster_with({{Class13::Car, 9}, {Class13::Bus, 9}, {Class13::Road, 3000},
                                  {Class13::Sidewalk, 2000}, {Class13::Building, 2000}, {Class13::Vegetation, 1000},
                                  {Class13::Sky, 1982}});
  // exactly at the floor counts as present: 10 of 10000 pixels
  const auto edge = raster_with({{Class13::Car, 10}, {Class13::Bus, 10}, {Class13::Truck, 10}, {Class13::Person, 10},
                                 {Class13::Rider, 10}, {Class13::Road, 9950}});
  const auto all_void = raster_with({});
  const std::vector<SemanticSample> samples = {{"eight", eight}, {"seven", seven}, {"edge", edge}, {"void", all_void}};

  const auto rep = curate(samples);
  ASSERT_EQ(rep.samples.size(), 4u);
  EXPECT_EQ(rep.samples[0].distinct_classes, 8u);
  EXPECT_TRUE(rep.samples[0].kept);
  EXPECT_EQ(rep.samples[1].distinct_classes, 5u);
  EXPECT_FALSE(rep.samples[1].kept);
  EXPECT_EQ(rep.samples[2].distinct_classes, 6u);
  EXPECT_TRUE(rep.samples[2].kept);
  EXPECT_EQ(rep.samples[3].distinct_classes, 0u);
  EXPECT_FALSE(rep.samples[3].kept);
  EXPECT_EQ(rep.kept_count(), 2u);

  CurationConfig with_void;
  with_void.count_void = true;
  const auto rep_v = curate(samples, with_void);
  EXPECT_EQ(rep_v.samples[3].distinct_classes, 1u);
  EXPECT_EQ(rep_v.samples[0].distinct_classes, 9u);  // the 1000 leftover pixels are void
  EXPECT_FALSE(rep_v.samples[3].kept);

  for (const auto& s : rep.samples) {
    double sum = 0;
    for (double f : s.fractions) sum += f;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Curation, AggregateIsSumOfKept) {
  Rng rng(8);
  std::vector<std::vector<std::uint8_t>> rasters;
  for (int i = 0; i < 30; ++i) {
    const std::size_t classes = 3 + rng.index(9);
    std::vector<std::uint8_t> r(5000);
    for (auto& v : r) v = static_cast<std::uint8_t>(rng.index(classes));
    rasters.push_back(std::move(r));
  }
  std::vector<SemanticSample> samples;
  for (std::size_t i = 0; i < rasters.size(); ++i) samples.push_back({"s" + std::to_string(i), rasters[i]});
  const auto rep = curate(samples);
  ClassHistogram sum{};
  std::size_t kept = 0;
  for (const auto& s : rep.samples) {
    EXPECT_EQ(s.kept, s.distinct_classes >= 6);
    if (!s.kept) continue;
    ++kept;
    for (std::size_t c = 0; c < kNumClasses13; ++c) sum[c] += s.pixels[c];
  }
  EXPECT_GT(kept, 0u);
  EXPECT_LT(kept, rasters.size());
  EXPECT_EQ(rep.aggregate, sum);
}

TEST(Curation, PermutationInvariant) {
  Rng rng(9);
  std::vector<std::uint8_t> r(4000);
  for (auto& v : r) v = static_cast<std::uint8_t>(rng.index(kNumClasses13));
  auto shuffled = r;
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.index(i + 1)]);
  const auto a = evaluate_sample("a", class_histogram(r));
  const auto b = evaluate_sample("a", class_histogram(shuffled));
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.distinct_classes, b.distinct_classes);
  EXPECT_EQ(a.kept, b.kept);
}

TEST(Curation, UnknownClassAndReports) {
  std::vector<std::uint8_t> r(10, 13);
  EXPECT_THROW(class_histogram(r), Error);
  const auto eight = raster_with({{Class13::Car, 1000}, {Class13::Bus, 1000}, {Class13::Truck, 1000},
                                  {Class13::Person, 1000}, {Class13::Road, 1000}, {Class13::Sidewalk, 1000},
                                  {Class13::Building, 1000}, {Class13::Sky, 2000}});
  const std::vector<SemanticSample> samples = {{"eight", eight}};
  const auto rep = curate(samples);
  const auto csv = curation_csv(rep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("eight"), std::string::npos);
  EXPECT_NE(curation_json(rep).find("\"kept\""), std::string::npos);
  // empty kept set still reports
  const auto empty = curate(std::span<const SemanticSample>{});
  EXPECT_EQ(empty.kept_count(), 0u);
}

}  // namespace
}  // namespace trove
