#include "boxseg/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace boxseg {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  // Returns the surviving root.
  int join(int a, int b, double weight) {
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    internal_[a] = std::max({internal_[a], internal_[b], weight});
    return a;
  }

  int size(int root) const { return size_[root]; }
  double internal(int root) const { return internal_[root]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<double> internal_;
};

struct Edge {
  int a;
  int b;
  double w;
};

}  // namespace

int SuperpixelParams::effective_min_size(const Rect& region) const {
  if (min_size > 0) return min_size;
  return std::max<long>(20, region.area() / 400);
}

SuperpixelPartition felzenszwalb_segment(const ImageRgb& img, const Rect& region, double scale,
                                         int min_size) {
  if (!region.valid() || !img.bounds().contains(region))
    throw std::invalid_argument("felzenszwalb_segment: region outside image");
  if (!(scale > 0)) throw std::invalid_argument("felzenszwalb_segment: scale must be positive");
  if (min_size < 1) throw std::invalid_argument("felzenszwalb_segment: min_size must be >= 1");

  const int w = region.width(), h = region.height();
  const auto index = [w](int x, int y) { return y * w + x; };
  const auto dist = [&](int x0, int y0, int x1, int y1) {
    const auto p = img.at(region.x0 + x0, region.y0 + y0);
    const auto q = img.at(region.x0 + x1, region.y0 + y1);
    const double dr = double(p[0]) - q[0], dg = double(p[1]) - q[1], db = double(p[2]) - q[2];
    return std::sqrt(dr * dr + dg * dg + db * db);
  };

  std::vector<Edge> edges;
  edges.reserve(std::size_t(2) * w * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) edges.push_back({index(x, y), index(x + 1, y), dist(x, y, x + 1, y)});
      if (y + 1 < h) edges.push_back({index(x, y), index(x, y + 1), dist(x, y, x, y + 1)});
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& l, const Edge& r) { return l.w < r.w; });

  DisjointSets sets(w * h);
  for (const Edge& e : edges) {
    const int a = sets.find(e.a), b = sets.find(e.b);
    if (a == b) continue;
    const double ta = sets.internal(a) + scale / sets.size(a);
    const double tb = sets.internal(b) + scale / sets.size(b);
    if (e.w <= std::min(ta, tb)) sets.join(a, b, e.w);
  }
  for (const Edge& e : edges) {
    const int a = sets.find(e.a), b = sets.find(e.b);
    if (a != b && (sets.size(a) < min_size || sets.size(b) < min_size)) sets.join(a, b, e.w);
  }

  SuperpixelPartition part;
  part.region = region;
  part.labels.resize(h, w);
  std::vector<int> root_to_id(std::size_t(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int root = sets.find(index(x, y));
      if (root_to_id[root] < 0) {
        root_to_id[root] = part.size();
        part.pixels.emplace_back();
      }
      const int id = root_to_id[root];
      part.labels(y, x) = id;
      part.pixels[id].push_back({region.x0 + x, region.y0 + y});
    }
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = part.labels(y, x);
      if (x + 1 < w && part.labels(y, x + 1) != id)
        part.adjacency.emplace_back(std::minmax(id, part.labels(y, x + 1)));
      if (y + 1 < h && part.labels(y + 1, x) != id)
        part.adjacency.emplace_back(std::minmax(id, part.labels(y + 1, x)));
    }
  }
  std::sort(part.adjacency.begin(), part.adjacency.end());
  part.adjacency.erase(std::unique(part.adjacency.begin(), part.adjacency.end()),
                       part.adjacency.end());
  return part;
}

int color_bin(std::uint8_t value) { return int(value) * kColorBins / 256; }

int texture_bin(double gradient) {
  const double g = std::clamp(gradient, -1.0, 1.0);
  return std::min(kTextureBins - 1, int(std::floor((g + 1.0) * 0.5 * kTextureBins)));
}

std::vector<Histogram> build_histograms(const ImageRgb& img, const Gradients& grad,
                                        const SuperpixelPartition& part) {
  std::vector<Histogram> hists(part.pixels.size());
  for (std::size_t id = 0; id < part.pixels.size(); ++id) {
    const auto& pix = part.pixels[id];
    if (pix.empty()) throw std::invalid_argument("build_histograms: empty superpixel");
    Histogram& hist = hists[id];
    for (const PixelCoord& p : pix) {
      const auto rgb = img.at(p.x, p.y);
      for (int c = 0; c < 3; ++c) hist.color(c * kColorBins + color_bin(rgb[c])) += 1.0;
      hist.texture(texture_bin(grad.gx(p.y, p.x))) += 1.0;
      hist.texture(kTextureBins + texture_bin(grad.gy(p.y, p.x))) += 1.0;
    }
    const double inv = 1.0 / double(pix.size());
    hist.color *= inv;
    hist.texture *= inv;
  }
  return hists;
}

std::vector<Histogram> build_histograms(const ImageRgb& img, const SuperpixelPartition& part) {
  return build_histograms(img, gradients(to_grayscale(img)), part);
}

Raster<std::uint16_t> label_image(const SuperpixelPartition& part) {
  return part.labels.min(65535).cast<std::uint16_t>();
}

}  // namespace boxseg
