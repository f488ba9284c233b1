#include "trove/raster_io.hpp"

#include <png.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "trove/error.hpp"

namespace trove {

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_error_throw(png_structp, png_const_charp msg) {
  throw Error(Errc::CorruptStream, std::string("png: ") + msg);
}

void png_warning_ignore(png_structp, png_const_charp) {}

// rows are given as big-endian byte rows
std::vector<std::uint8_t> encode_png(int width, int height, int color_type, int bit_depth,
                                     const std::vector<std::uint8_t>& packed, std::size_t row_bytes) {
  if (width <= 0 || height <= 0) throw Error(Errc::EmptyImage, "png: empty image");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_throw, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(packed.data() + static_cast<std::size_t>(y) * row_bytes));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> pack16(std::span<const std::uint16_t> px) {
  std::vector<std::uint8_t> out(px.size() * 2);
  for (std::size_t i = 0; i < px.size(); ++i) {
    out[2 * i] = static_cast<std::uint8_t>(px[i] >> 8);
    out[2 * i + 1] = static_cast<std::uint8_t>(px[i] & 0xff);
  }
  return out;
}

void check_size(int w, int h, std::size_t n, int channels) {
  if (w <= 0 || h <= 0 || n != static_cast<std::size_t>(w) * h * channels) {
    throw Error(Errc::EmptyImage, "pixel buffer does not match image size");
  }
}

void put_f32_le(std::vector<std::uint8_t>& out, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
}

void put_i32_le(std::vector<std::uint8_t>& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray8(int w, int h, std::span<const std::uint8_t> px) {
  check_size(w, h, px.size(), 1);
  return encode_png(w, h, PNG_COLOR_TYPE_GRAY, 8, {px.begin(), px.end()}, static_cast<std::size_t>(w));
}

std::vector<std::uint8_t> encode_png_gray16(int w, int h, std::span<const std::uint16_t> px) {
  check_size(w, h, px.size(), 1);
  return encode_png(w, h, PNG_COLOR_TYPE_GRAY, 16, pack16(px), static_cast<std::size_t>(w) * 2);
}

std::vector<std::uint8_t> encode_png_rgb8(int w, int h, std::span<const std::uint8_t> px) {
  check_size(w, h, px.size(), 3);
  return encode_png(w, h, PNG_COLOR_TYPE_RGB, 8, {px.begin(), px.end()}, static_cast<std::size_t>(w) * 3);
}

std::vector<std::uint8_t> encode_png_rgb16(int w, int h, std::span<const std::uint16_t> px) {
  check_size(w, h, px.size(), 3);
  return encode_png(w, h, PNG_COLOR_TYPE_RGB, 16, pack16(px), static_cast<std::size_t>(w) * 6);
}

DecodedImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(Errc::CorruptStream, "not a PNG stream");
  }
  struct Reader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
  } reader{bytes};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_throw, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  DecodedImage img;
  try {
    png_set_read_fn(png, &reader, [](png_structp p, png_bytep out, png_size_t n) {
      auto* r = static_cast<Reader*>(png_get_io_ptr(p));
      if (r->pos + n > r->data.size()) png_error(p, "truncated stream");
      std::memcpy(out, r->data.data() + r->pos, n);
      r->pos += n;
    });
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    depth = png_get_bit_depth(png, info);
    img.bit_depth = depth;
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> row(row_bytes);
    img.samples.reserve(static_cast<std::size_t>(img.width) * img.height * img.channels);
    for (int y = 0; y < img.height; ++y) {
      png_read_row(png, row.data(), nullptr);
      const std::size_t n = static_cast<std::size_t>(img.width) * img.channels;
      for (std::size_t i = 0; i < n; ++i) {
        img.samples.push_back(depth == 16 ? static_cast<std::uint16_t>(row[2 * i] << 8 | row[2 * i + 1])
                                          : row[i]);
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<std::uint8_t> encode_pfm(int w, int h, std::span<const float> depth) {
  check_size(w, h, depth.size(), 1);
  std::ostringstream header;
  header << "Pf\n" << w << " " << h << "\n-1.0\n";
  const std::string hs = header.str();
  std::vector<std::uint8_t> out(hs.begin(), hs.end());
  out.reserve(out.size() + depth.size() * 4);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) put_f32_le(out, depth[static_cast<std::size_t>(y) * w + x]);
  }
  return out;
}

std::vector<float> decode_pfm(std::span<const std::uint8_t> bytes, int& w, int& h) {
  std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 64)));
  std::istringstream in(head);
  std::string magic;
  double scale = 0;
  if (!(in >> magic >> w >> h >> scale) || magic != "Pf" || w <= 0 || h <= 0) {
    throw Error(Errc::CorruptStream, "bad PFM header");
  }
  if (scale >= 0) throw Error(Errc::CorruptStream, "big-endian PFM not supported");
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < offset + n * 4) throw Error(Errc::CorruptStream, "truncated PFM");
  std::vector<float> out(n);
  for (int y = h - 1, r = 0; y >= 0; --y, ++r) {
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(y) * w + x] =
          std::bit_cast<float>(get_u32_le(bytes.data() + offset + (static_cast<std::size_t>(r) * w + x) * 4));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_flo(int w, int h, std::span<const float> uv) {
  check_size(w, h, uv.size(), 2);
  std::vector<std::uint8_t> out;
  out.reserve(12 + uv.size() * 4);
  put_f32_le(out, kFloMagic);
  put_i32_le(out, w);
  put_i32_le(out, h);
  for (float f : uv) put_f32_le(out, f);
  return out;
}

std::vector<float> decode_flo(std::span<const std::uint8_t> bytes, int& w, int& h) {
  if (bytes.size() < 12 || std::bit_cast<float>(get_u32_le(bytes.data())) != kFloMagic) {
    throw Error(Errc::CorruptStream, "bad .flo magic");
  }
  w = static_cast<std::int32_t>(get_u32_le(bytes.data() + 4));
  h = static_cast<std::int32_t>(get_u32_le(bytes.data() + 8));
  if (w <= 0 || h <= 0) throw Error(Errc::CorruptStream, "bad .flo size");
  const std::size_t n = static_cast<std::size_t>(w) * h * 2;
  if (bytes.size() != 12 + n * 4) throw Error(Errc::CorruptStream, "truncated .flo");
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::bit_cast<float>(get_u32_le(bytes.data() + 12 + i * 4));
  return out;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::MissingFile, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(Errc::IoError, "short write to '" + path.string() + "'");
}

}  // namespace trove
