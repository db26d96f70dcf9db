#pragma once

#include "boxseg/imaging.hpp"

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace boxseg {

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Superpixel labelling of one crop of an image.
///
/// `labels` is region-sized (rows = region.height()) and holds ids 0..n-1
/// assigned in raster order of each superpixel's first pixel. `pixels[id]`
/// lists image coordinates in raster order. `adjacency` holds each unordered
/// pair (i < j) with at least one 4-neighbouring pixel pair, sorted.
struct SuperpixelPartition {
  Rect region;
  Raster<int> labels;
  std::vector<std::vector<PixelCoord>> pixels;
  std::vector<std::pair<int, int>> adjacency;

  int size() const { return int(pixels.size()); }
  int label_at(int x, int y) const { return labels(y - region.y0, x - region.x0); }
};

struct SuperpixelParams {
  double scale = 100.0;
  /// 0 selects max(20, crop_area / 400).
  int min_size = 0;

  int effective_min_size(const Rect& region) const;
};

inline constexpr int kColorBins = 25;
inline constexpr int kTextureBins = 10;

/// Color: 25 bins for each of R,G,B (channel-major). Texture: 10 bins for
/// each of gx, gy over [-1,1]. Each channel/orientation is L1-normalized.
struct Histogram {
  Eigen::Matrix<double, 3 * kColorBins, 1> color = decltype(color)::Zero();
  Eigen::Matrix<double, 2 * kTextureBins, 1> texture = decltype(texture)::Zero();
};

/// Felzenszwalb-Huttenlocher graph segmentation restricted to `region`.
/// Edge weights are Euclidean RGB distances over 4-neighbours; the sort is
/// stable over (source pixel raster index, right-before-down).
SuperpixelPartition felzenszwalb_segment(const ImageRgb& img, const Rect& region, double scale,
                                         int min_size);

inline SuperpixelPartition felzenszwalb_segment(const ImageRgb& img, const Rect& region,
                                                const SuperpixelParams& params) {
  return felzenszwalb_segment(img, region, params.scale, params.effective_min_size(region));
}

int color_bin(std::uint8_t value);
int texture_bin(double gradient);

/// `grad` must be the gradients of the whole image's grayscale.
std::vector<Histogram> build_histograms(const ImageRgb& img, const Gradients& grad,
                                        const SuperpixelPartition& part);
std::vector<Histogram> build_histograms(const ImageRgb& img, const SuperpixelPartition& part);

/// Label map of the crop as 16-bit values (ids saturate at 65535).
Raster<std::uint16_t> label_image(const SuperpixelPartition& part);

}  // namespace boxseg
