#include "trove/post.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "trove/error.hpp"
#include "trove/raster_io.hpp"

namespace trove {

using nlohmann::json;

namespace {

// Linear sRGB (D65) to XYZ.
const Mat3& rgb_to_xyz() {
  static const Mat3 m = [] {
    Mat3 r;
    r << 0.4124, 0.3576, 0.1805,  //
        0.2126, 0.7152, 0.0722,   //
        0.0193, 0.1192, 0.9505;
    return r;
  }();
  return m;
}

const Mat3& xyz_to_rgb() {
  static const Mat3 m = rgb_to_xyz().inverse();
  return m;
}

// Reference white: XYZ of linear (1, 1, 1).
const Vec3& white() {
  static const Vec3 w = rgb_to_xyz() * Vec3::Ones();
  return w;
}

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double f) { return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0); }

double srgb_eotf(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double srgb_oetf(double c) {
  if (c <= 0.0031308) return 12.92 * c;
  return 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

template <class Image, class Get>
LabStats stats_of(const Image& img, Get&& get) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (img.width <= 0 || img.height <= 0 || img.pixels.size() != n * 3) throw Error(Errc::EmptyImage, "empty image");
  // two passes for a stable variance
  std::vector<Vec3> lab(n);
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    lab[i] = srgb_to_lab(get(i));
    sum += lab[i];
  }
  LabStats s;
  s.mean = sum / static_cast<double>(n);
  Vec3 sq = Vec3::Zero();
  for (const auto& v : lab) sq += (v - s.mean).cwiseAbs2();
  s.std = (sq / static_cast<double>(n)).cwiseSqrt();
  return s;
}

}  // namespace

Vec3 srgb_to_lab(const Vec3& srgb) {
  const Vec3 lin(srgb_eotf(srgb.x()), srgb_eotf(srgb.y()), srgb_eotf(srgb.z()));
  const Vec3 xyz = rgb_to_xyz() * lin;
  const double fx = lab_f(xyz.x() / white().x());
  const double fy = lab_f(xyz.y() / white().y());
  const double fz = lab_f(xyz.z() / white().z());
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Vec3 lab_to_srgb(const Vec3& lab) {
  const double fy = (lab.x() + 16.0) / 116.0;
  const double fx = fy + lab.y() / 500.0;
  const double fz = fy - lab.z() / 200.0;
  const Vec3 xyz(lab_f_inv(fx) * white().x(), lab_f_inv(fy) * white().y(), lab_f_inv(fz) * white().z());
  const Vec3 lin = xyz_to_rgb() * xyz;
  return {srgb_oetf(lin.x()), srgb_oetf(lin.y()), srgb_oetf(lin.z())};
}

LabStats lab_stats(const RgbImage& image) {
  return stats_of(image, [&](std::size_t i) -> Vec3 {
    return Vec3(image.pixels[i * 3], image.pixels[i * 3 + 1], image.pixels[i * 3 + 2]) / 255.0;
  });
}

LabStats lab_stats(const RgbImageF& image) {
  return stats_of(image, [&](std::size_t i) -> Vec3 {
    return Vec3(image.pixels[i * 3], image.pixels[i * 3 + 1], image.pixels[i * 3 + 2]);
  });
}

RgbImageF to_float(const RgbImage& image) {
  RgbImageF out{image.width, image.height, std::vector<float>(image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out.pixels[i] = static_cast<float>(image.pixels[i] / 255.0);
  return out;
}

RgbImageF color_transfer(const RgbImage& source, const LabStats& target, double alpha) {
  const LabStats src = lab_stats(source);
  if (alpha == 0.0) return to_float(source);
  const Vec3 mu = (1.0 - alpha) * src.mean + alpha * target.mean;
  const Vec3 sigma = (1.0 - alpha) * src.std + alpha * target.std;
  Vec3 ratio;
  // summation rounding leaves a flat channel with a std of order 1e-15
  constexpr double kFlat = 1e-9;
  for (int c = 0; c < 3; ++c) ratio[c] = src.std[c] > kFlat ? sigma[c] / src.std[c] : 0.0;

  RgbImageF out{source.width, source.height, std::vector<float>(source.pixels.size())};
  const std::size_t n = static_cast<std::size_t>(source.width) * source.height;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 in(source.pixels[i * 3] / 255.0, source.pixels[i * 3 + 1] / 255.0, source.pixels[i * 3 + 2] / 255.0);
    const Vec3 lab = srgb_to_lab(in);
    const Vec3 moved = (lab - src.mean).cwiseProduct(ratio) + mu;
    const Vec3 rgb = lab_to_srgb(moved);
    for (int c = 0; c < 3; ++c) out.pixels[i * 3 + c] = static_cast<float>(std::clamp(rgb[c], 0.0, 1.0));
  }
  return out;
}

RgbImage quantize(const RgbImageF& image) {
  RgbImage out{image.width, image.height, std::vector<std::uint8_t>(image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(image.pixels[i]), 0.0, 1.0) * 255.0));
  }
  return out;
}

std::string lab_stats_json(const LabStats& s) {
  json j = {{"mean", {s.mean.x(), s.mean.y(), s.mean.z()}}, {"std", {s.std.x(), s.std.y(), s.std.z()}}};
  return j.dump(1) + "\n";
}

LabStats parse_lab_stats(std::string_view text) {
  try {
    const json j = json::parse(text);
    LabStats s;
    for (int c = 0; c < 3; ++c) {
      s.mean[c] = j.at("mean").at(c).get<double>();
      s.std[c] = j.at("std").at(c).get<double>();
      if (s.std[c] < 0) throw Error(Errc::SchemaViolation, "Lab statistics: negative std");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("Lab statistics: ") + e.what());
  }
}

RgbImage read_rgb_png(const std::filesystem::path& path) {
  const DecodedImage d = decode_png(read_binary_file(path));
  RgbImage img{d.width, d.height, {}};
  const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
  img.pixels.resize(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      std::uint16_t v = d.channels == 1 ? d.samples[i] : d.samples[i * 3 + c];
      if (d.bit_depth == 16) v = static_cast<std::uint16_t>((v * 255 + 32767) / 65535);
      img.pixels[i * 3 + c] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  write_binary_file(path, encode_png_rgb8(image.width, image.height, image.pixels));
}

// ---------------------------------------------------------------------------

ClassHistogram class_histogram(std::span<const std::uint8_t> raster13) {
  ClassHistogram h{};
  for (std::size_t i = 0; i < raster13.size(); ++i) {
    if (raster13[i] >= kNumClasses13) {
      throw Error(Errc::UnknownClassId, "13-class id " + std::to_string(raster13[i]) + " at pixel " + std::to_string(i));
    }
    ++h[raster13[i]];
  }
  return h;
}

std::size_t CurationReport::kept_count() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.kept; }));
}

SampleReport evaluate_sample(std::string image_id, const ClassHistogram& histogram, const CurationConfig& cfg) {
  SampleReport r;
  r.image_id = std::move(image_id);
  r.pixels = histogram;
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  for (std::size_t c = 0; c < kNumClasses13; ++c) {
    r.fractions[c] = total ? static_cast<double>(histogram[c]) / static_cast<double>(total) : 0.0;
    if (c == static_cast<std::size_t>(Class13::Void) && !cfg.count_void) continue;
    if (histogram[c] > 0 && r.fractions[c] >= cfg.pixel_floor) ++r.distinct_classes;
  }
  r.kept = r.distinct_classes >= cfg.min_classes;
  return r;
}

CurationReport curate_histograms(std::vector<SampleReport> samples, const CurationConfig& cfg) {
  CurationReport report;
  report.config = cfg;
  for (auto& s : samples) {
    SampleReport r = evaluate_sample(std::move(s.image_id), s.pixels, cfg);
    if (r.kept) {
      for (std::size_t c = 0; c < kNumClasses13; ++c) report.aggregate[c] += r.pixels[c];
    }
    report.samples.push_back(std::move(r));
  }
  return report;
}

CurationReport curate(std::span<const SemanticSample> samples, const CurationConfig& cfg) {
  std::vector<SampleReport> hist;
  hist.reserve(samples.size());
  for (const auto& s : samples) {
    SampleReport r;
    r.image_id = s.image_id;
    r.pixels = class_histogram(s.raster13);
    hist.push_back(std::move(r));
  }
  return curate_histograms(std::move(hist), cfg);
}

std::string curation_csv(const CurationReport& report, const ClassTaxonomy& taxonomy) {
  std::ostringstream out;
  out << "image_id,distinct_classes,kept";
  for (const auto& name : taxonomy.names13()) out << ",frac_" << class_slug(name);
  out << "\n";
  char buf[32];
  for (const auto& s : report.samples) {
    out << s.image_id << "," << s.distinct_classes << "," << (s.kept ? 1 : 0);
    for (double f : s.fractions) {
      std::snprintf(buf, sizeof buf, "%.9g", f);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string curation_json(const CurationReport& report, const ClassTaxonomy& taxonomy) {
  json hist = json::object();
  json frac = json::object();
  std::uint64_t total = 0;
  for (auto c : report.aggregate) total += c;
  for (std::size_t c = 0; c < kNumClasses13; ++c) {
    hist[taxonomy.names13()[c]] = report.aggregate[c];
    frac[taxonomy.names13()[c]] = total ? static_cast<double>(report.aggregate[c]) / static_cast<double>(total) : 0.0;
  }
  json j = {{"samples", report.samples.size()},
            {"kept", report.kept_count()},
            {"min_classes", report.config.min_classes},
            {"pixel_floor", report.config.pixel_floor},
            {"count_void", report.config.count_void},
            {"histogram", std::move(hist)},
            {"fractions", std::move(frac)}};
  return j.dump(1) + "\n";
}

}  // namespace trove
