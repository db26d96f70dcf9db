#include "boxseg/imaging.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

namespace boxseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw ImageIoError("cannot open '" + path.string() + "'");
  return f;
}

// Decoded 8- or 16-bit samples, `channels` per pixel.
struct Decoded {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> samples;
};

// Reads any PNG and normalizes to 8-bit with `want_channels` (1 = gray, 3 = RGB).
Decoded decode(const std::filesystem::path& path, int want_channels) {
  FilePtr f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw ImageIoError("'" + path.string() + "' is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("png_create_info_struct failed");
  }

  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("failed to decode '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  const bool is_gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
  if (want_channels == 3 && is_gray) png_set_gray_to_rgb(png);
  if (want_channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  out.width = int(png_get_image_width(png, info));
  out.height = int(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != std::size_t(out.width) * want_channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("unsupported PNG layout in '" + path.string() + "'");
  }
  out.samples.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.samples.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type,
            int bit_depth, const std::uint8_t* data, std::size_t stride) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + stride * y);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("failed to encode '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // rows are host (little-endian) order
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageRgb read_png_rgb(const std::filesystem::path& path) {
  Decoded d = decode(path, 3);
  return ImageRgb(d.width, d.height, std::move(d.samples));
}

void write_png_rgb(const std::filesystem::path& path, const ImageRgb& img) {
  encode(path, img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8, img.data().data(),
         std::size_t(img.width()) * 3);
}

Raster<std::uint8_t> read_png_gray8(const std::filesystem::path& path) {
  Decoded d = decode(path, 1);
  Raster<std::uint8_t> out(d.height, d.width);
  std::copy(d.samples.begin(), d.samples.end(), out.data());
  return out;
}

void write_png_gray8(const std::filesystem::path& path, const Raster<std::uint8_t>& img) {
  encode(path, int(img.cols()), int(img.rows()), PNG_COLOR_TYPE_GRAY, 8, img.data(),
         std::size_t(img.cols()));
}

void write_png_gray16(const std::filesystem::path& path, const Raster<std::uint16_t>& img) {
  encode(path, int(img.cols()), int(img.rows()), PNG_COLOR_TYPE_GRAY, 16,
         reinterpret_cast<const std::uint8_t*>(img.data()), std::size_t(img.cols()) * 2);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  return (read_png_gray8(path) >= std::uint8_t(128)).cast<std::uint8_t>();
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  const Raster<std::uint8_t> gray = (mask != 0).cast<std::uint8_t>() * std::uint8_t(255);
  write_png_gray8(path, gray);
}

}  // namespace boxseg
