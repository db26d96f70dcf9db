#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

namespace boxseg {

/// Row-major raster of `Scalar`; rows index y, columns index x.
template <class Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RealMap = Raster<double>;
/// Values in {0,1}.
using BinaryMask = Raster<std::uint8_t>;

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return valid() ? long(width()) * height() : 0; }
  bool valid() const { return x0 < x1 && y0 < y1; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool contains(const Rect& r) const {
    return r.x0 >= x0 && r.y0 >= y0 && r.x1 <= x1 && r.y1 <= y1;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect intersect(const Rect& a, const Rect& b);

template <class Derived>
Rect full_rect(const Eigen::DenseBase<Derived>& m) {
  return {0, 0, int(m.cols()), int(m.rows())};
}

/// 8-bit RGB raster, row-major interleaved.
class ImageRgb {
 public:
  using Pixel = std::array<std::uint8_t, 3>;

  ImageRgb() = default;
  ImageRgb(int width, int height, Pixel fill = {0, 0, 0});
  ImageRgb(int width, int height, std::vector<std::uint8_t> interleaved);

  int width() const { return width_; }
  int height() const { return height_; }
  Rect bounds() const { return {0, 0, width_, height_}; }

  Pixel at(int x, int y) const {
    const auto* p = &data_[3 * (std::size_t(y) * width_ + x)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Pixel v) {
    auto* p = &data_[3 * (std::size_t(y) * width_ + x)];
    p[0] = v[0];
    p[1] = v[1];
    p[2] = v[2];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Gradients {
  RealMap gx;
  RealMap gy;
};

/// Luma (0.299, 0.587, 0.114) scaled to [0,1].
RealMap to_grayscale(const ImageRgb& img);

/// Central differences in the interior, one-sided differences on the border.
Gradients gradients(const RealMap& gray);

/// Samples `src` of `map` onto an out_w x out_h grid. Output cell (u,v) reads
/// the continuous point x = src.x0 + (u+0.5)*src.w/out_w - 0.5 (likewise y),
/// with neighbours clamped to the map. Throws if `src` is empty after
/// clamping to the map.
RealMap resample_bilinear(const RealMap& map, const Rect& src, int out_w, int out_h);

/// Nearest sample: x = src.x0 + floor((u+0.5)*src.w/out_w).
BinaryMask resample_nearest(const BinaryMask& mask, const Rect& src, int out_w, int out_h);

/// Grows width and height by `factor` in total (half per side), rounding
/// outward, then clamps to `bounds`.
Rect enlarge_box(const Rect& box, double factor, const Rect& bounds);

/// Continuous coordinate used by both resamplers and by ROI assembly.
inline double grid_to_source(int u, int src_origin, int src_extent, int out_extent) {
  return src_origin + (u + 0.5) * double(src_extent) / out_extent - 0.5;
}

/// Integer source index for nearest sampling.
inline int grid_to_source_nearest(int u, int src_origin, int src_extent, int out_extent) {
  return src_origin + int((2L * u + 1) * src_extent / (2L * out_extent));
}

// PNG I/O (libpng). Masks are 8-bit grayscale, 0 = background, 255 = foreground;
// on read any value >= 128 counts as foreground.
class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ImageRgb read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const ImageRgb& img);
Raster<std::uint8_t> read_png_gray8(const std::filesystem::path& path);
void write_png_gray8(const std::filesystem::path& path, const Raster<std::uint8_t>& img);
void write_png_gray16(const std::filesystem::path& path, const Raster<std::uint16_t>& img);
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace boxseg
