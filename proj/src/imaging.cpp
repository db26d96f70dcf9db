#include "boxseg/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace boxseg {

Rect intersect(const Rect& a, const Rect& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
          std::min(a.y1, b.y1)};
}

ImageRgb::ImageRgb(int width, int height, Pixel fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("ImageRgb: empty dimensions");
  data_.resize(std::size_t(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

ImageRgb::ImageRgb(int width, int height, std::vector<std::uint8_t> interleaved)
    : width_(width), height_(height), data_(std::move(interleaved)) {
  if (width < 1 || height < 1) throw std::invalid_argument("ImageRgb: empty dimensions");
  if (data_.size() != std::size_t(width) * height * 3)
    throw std::invalid_argument("ImageRgb: data length does not match dimensions");
}

RealMap to_grayscale(const ImageRgb& img) {
  RealMap gray(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto p = img.at(x, y);
      gray(y, x) = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  }
  return gray.min(1.0).max(0.0);
}

Gradients gradients(const RealMap& gray) {
  const Eigen::Index h = gray.rows(), w = gray.cols();
  Gradients g{RealMap::Zero(h, w), RealMap::Zero(h, w)};
  if (w > 1) {
    for (Eigen::Index y = 0; y < h; ++y) {
      g.gx(y, 0) = gray(y, 1) - gray(y, 0);
      g.gx(y, w - 1) = gray(y, w - 1) - gray(y, w - 2);
      for (Eigen::Index x = 1; x + 1 < w; ++x) g.gx(y, x) = 0.5 * (gray(y, x + 1) - gray(y, x - 1));
    }
  }
  if (h > 1) {
    for (Eigen::Index x = 0; x < w; ++x) {
      g.gy(0, x) = gray(1, x) - gray(0, x);
      g.gy(h - 1, x) = gray(h - 1, x) - gray(h - 2, x);
      for (Eigen::Index y = 1; y + 1 < h; ++y) g.gy(y, x) = 0.5 * (gray(y + 1, x) - gray(y - 1, x));
    }
  }
  return g;
}

namespace {

Rect checked_source(const Rect& src, Eigen::Index rows, Eigen::Index cols, int out_w, int out_h) {
  const Rect r = intersect(src, Rect{0, 0, int(cols), int(rows)});
  if (!r.valid()) throw std::invalid_argument("resample: degenerate source rectangle");
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resample: empty output size");
  return r;
}

}  // namespace

RealMap resample_bilinear(const RealMap& map, const Rect& src, int out_w, int out_h) {
  const Rect r = checked_source(src, map.rows(), map.cols(), out_w, out_h);
  const double xmax = double(map.cols() - 1), ymax = double(map.rows() - 1);
  RealMap out(out_h, out_w);
  for (int v = 0; v < out_h; ++v) {
    const double sy = std::clamp(grid_to_source(v, r.y0, r.height(), out_h), 0.0, ymax);
    const int y0 = int(std::floor(sy));
    const int y1 = std::min(y0 + 1, int(ymax));
    const double fy = sy - y0;
    for (int u = 0; u < out_w; ++u) {
      const double sx = std::clamp(grid_to_source(u, r.x0, r.width(), out_w), 0.0, xmax);
      const int x0 = int(std::floor(sx));
      const int x1 = std::min(x0 + 1, int(xmax));
      const double fx = sx - x0;
      const double top = (1 - fx) * map(y0, x0) + fx * map(y0, x1);
      const double bot = (1 - fx) * map(y1, x0) + fx * map(y1, x1);
      out(v, u) = (1 - fy) * top + fy * bot;
    }
  }
  return out;
}

BinaryMask resample_nearest(const BinaryMask& mask, const Rect& src, int out_w, int out_h) {
  const Rect r = checked_source(src, mask.rows(), mask.cols(), out_w, out_h);
  BinaryMask out(out_h, out_w);
  for (int v = 0; v < out_h; ++v) {
    const int sy = grid_to_source_nearest(v, r.y0, r.height(), out_h);
    for (int u = 0; u < out_w; ++u)
      out(v, u) = mask(sy, grid_to_source_nearest(u, r.x0, r.width(), out_w)) ? 1 : 0;
  }
  return out;
}

Rect enlarge_box(const Rect& box, double factor, const Rect& bounds) {
  if (factor < 0) throw std::invalid_argument("enlarge_box: negative factor");
  // Tolerance keeps exact halves (e.g. 0.2 * 20 / 2) from rounding one pixel too far.
  constexpr double kTol = 1e-9;
  const double dx = 0.5 * factor * box.width();
  const double dy = 0.5 * factor * box.height();
  Rect r{int(std::floor(box.x0 - dx + kTol)), int(std::floor(box.y0 - dy + kTol)),
         int(std::ceil(box.x1 + dx - kTol)), int(std::ceil(box.y1 + dy - kTol))};
  r = intersect(r, bounds);
  return r;
}

}  // namespace boxseg
