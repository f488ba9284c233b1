#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trove/geo.hpp"
#include "trove/taxonomy.hpp"

namespace trove {

// 8-bit sRGB, interleaved RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

// sRGB in [0, 1], interleaved RGB.
struct RgbImageF {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;
};

// sRGB in [0, 1] -> CIE L*a*b* (D65), and back without clamping.
Vec3 srgb_to_lab(const Vec3& srgb);
Vec3 lab_to_srgb(const Vec3& lab);

struct LabStats {
  Vec3 mean = Vec3::Zero();
  Vec3 std = Vec3::Zero();  // population standard deviation
};

// Throws EmptyImage.
LabStats lab_stats(const RgbImage& image);
LabStats lab_stats(const RgbImageF& image);

inline constexpr double kDefaultTransferAlpha = 0.8;

// Mean/variance transfer in L*a*b* toward a blend of the source and target
// statistics. The result is clamped to [0, 1]; quantize() yields 8-bit.
RgbImageF color_transfer(const RgbImage& source, const LabStats& target, double alpha = kDefaultTransferAlpha);
RgbImage quantize(const RgbImageF& image);
RgbImageF to_float(const RgbImage& image);

std::string lab_stats_json(const LabStats& stats);
LabStats parse_lab_stats(std::string_view json);

// Reads any PNG as 8-bit RGB (gray is expanded, 16-bit is scaled).
RgbImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

// ---------------------------------------------------------------------------
// curation

using ClassHistogram = std::array<std::uint64_t, kNumClasses13>;

// Throws UnknownClassId.
ClassHistogram class_histogram(std::span<const std::uint8_t> raster13);

struct CurationConfig {
  double pixel_floor = 0.001;
  std::size_t min_classes = 6;
  bool count_void = false;
};

struct SampleReport {
  std::string image_id;
  ClassHistogram pixels{};
  std::array<double, kNumClasses13> fractions{};
  std::size_t distinct_classes = 0;
  bool kept = false;
};

struct CurationReport {
  CurationConfig config;
  std::vector<SampleReport> samples;
  ClassHistogram aggregate{};  // over kept samples

  std::size_t kept_count() const;
};

SampleReport evaluate_sample(std::string image_id, const ClassHistogram& histogram, const CurationConfig& cfg = {});

struct SemanticSample {
  std::string image_id;
  std::span<const std::uint8_t> raster13;
};

CurationReport curate(std::span<const SemanticSample> samples, const CurationConfig& cfg = {});
CurationReport curate_histograms(std::vector<SampleReport> samples, const CurationConfig& cfg = {});

// One row per sample.
std::string curation_csv(const CurationReport& report, const ClassTaxonomy& taxonomy = ClassTaxonomy::standard());
// Aggregate over the kept set.
std::string curation_json(const CurationReport& report, const ClassTaxonomy& taxonomy = ClassTaxonomy::standard());

}  // namespace trove
