#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "trove/ingest.hpp"

namespace trove {

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

float read_f32_le(const std::byte* p) {
  std::uint32_t u = 0;
  for (int i = 3; i >= 0; --i) u = (u << 8) | static_cast<std::uint32_t>(p[i]);
  return std::bit_cast<float>(u);
}

void write_f32_le(std::vector<std::byte>& out, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xff));
}

constexpr std::size_t kRecordBytes = 16;

}  // namespace

LidarParseResult parse_lidar_bytes(std::span<const std::byte> bytes) {
  if (bytes.size() < kLidarMagic.size() ||
      std::memcmp(bytes.data(), kLidarMagic.data(), kLidarMagic.size()) != 0) {
    throw Error(Errc::TruncatedRecord, "missing TRVLID01 header");
  }
  const auto body = bytes.subspan(kLidarMagic.size());
  if (body.size() % kRecordBytes != 0) {
    throw Error(Errc::TruncatedRecord, "trailing " + std::to_string(body.size() % kRecordBytes) + " bytes");
  }
  if (body.empty()) throw Error(Errc::TruncatedRecord, "sweep has no points");

  LidarParseResult r;
  const std::size_t n = body.size() / kRecordBytes;
  r.sweep.points.reserve(n);
  std::size_t unknown = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* p = body.data() + i * kRecordBytes;
    LidarPoint pt{read_f32_le(p), read_f32_le(p + 4), read_f32_le(p + 8), -1};
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
      throw Error(Errc::NonFinitePoint, "point " + std::to_string(i) + " has a non-finite coordinate");
    }
    const float label = read_f32_le(p + 12);
    if (label == -1.0f) {
      pt.label = -1;
    } else if (std::isfinite(label) && label >= 0.0f && label < static_cast<float>(kNumClasses20) &&
               label == std::floor(label)) {
      pt.label = static_cast<std::int8_t>(label);
    } else {
      pt.label = static_cast<std::int8_t>(Class20::Void);
      ++unknown;
    }
    r.sweep.points.push_back(pt);
  }
  if (unknown > 0) {
    r.warnings.push_back({Errc::UnknownLabelId, std::to_string(unknown) + " point(s) with a label outside the taxonomy mapped to void"});
  }
  return r;
}

LidarParseResult parse_lidar(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw Error(Errc::MissingFile, "cannot open '" + file.string() + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_lidar_bytes(std::as_bytes(std::span<const char>(raw)));
}

std::vector<std::byte> serialize_lidar(const LidarSweep& sweep) {
  std::vector<std::byte> out;
  out.reserve(kLidarMagic.size() + sweep.points.size() * kRecordBytes);
  for (char c : kLidarMagic) out.push_back(static_cast<std::byte>(c));
  for (const auto& p : sweep.points) {
    write_f32_le(out, p.x);
    write_f32_le(out, p.y);
    write_f32_le(out, p.z);
    write_f32_le(out, static_cast<float>(p.label));
  }
  return out;
}

}  // namespace trove
