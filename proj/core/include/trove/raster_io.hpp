#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace trove {

// PNG encoders; 16-bit samples are given in native order and written
// big-endian as PNG requires. Output is deterministic for equal input.
std::vector<std::uint8_t> encode_png_gray8(int width, int height, std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_png_gray16(int width, int height, std::span<const std::uint16_t> pixels);
std::vector<std::uint8_t> encode_png_rgb8(int width, int height, std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_png_rgb16(int width, int height, std::span<const std::uint16_t> pixels);

struct DecodedImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  int bit_depth = 8; // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

// Decodes any PNG to gray or RGB (alpha dropped, palette expanded).
// Throws Error(CorruptStream).
DecodedImage decode_png(std::span<const std::uint8_t> bytes);

// PFM, little-endian (scale -1.0), rows stored bottom-to-top.
std::vector<std::uint8_t> encode_pfm(int width, int height, std::span<const float> depth);
std::vector<float> decode_pfm(std::span<const std::uint8_t> bytes, int& width, int& height);

// Middlebury .flo: magic 202021.25, width, height, interleaved (u, v) float32.
inline constexpr float kFloMagic = 202021.25f;
// Value written for pixels without valid flow.
inline constexpr float kFloUnknown = 1e10f;
std::vector<std::uint8_t> encode_flo(int width, int height, std::span<const float> uv);
std::vector<float> decode_flo(std::span<const std::uint8_t> bytes, int& width, int& height);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace trove
