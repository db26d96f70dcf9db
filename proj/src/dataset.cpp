#include "boxseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace boxseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw DataError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(where + ": key '" + key + "' has the wrong type");
  }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw DataError(where + ": unknown key '" + key + "'");
}

}  // namespace

DatasetManifest parse_manifest(const json& j) {
  if (!j.is_object()) throw DataError("manifest: top level must be an object");
  reject_unknown(j, {"classes", "images"}, "manifest");
  DatasetManifest m;
  m.classes = field<std::vector<std::string>>(j, "classes", "manifest");
  if (!j.contains("images") || !j["images"].is_array())
    throw DataError("manifest: key 'images' must be an array");
  for (std::size_t i = 0; i < j["images"].size(); ++i) {
    const json& ji = j["images"][i];
    const std::string where = "manifest.images[" + std::to_string(i) + "]";
    if (!ji.is_object()) throw DataError(where + ": must be an object");
    reject_unknown(ji, {"path", "objects"}, where);
    ManifestImage img;
    img.path = field<std::string>(ji, "path", where);
    if (!ji.contains("objects") || !ji["objects"].is_array())
      throw DataError(where + ": key 'objects' must be an array");
    for (std::size_t o = 0; o < ji["objects"].size(); ++o) {
      const json& jo = ji["objects"][o];
      const std::string owhere = where + ".objects[" + std::to_string(o) + "]";
      if (!jo.is_object()) throw DataError(owhere + ": must be an object");
      reject_unknown(jo, {"class_id", "bbox", "gt_mask"}, owhere);
      ManifestObject obj;
      obj.class_id = field<int>(jo, "class_id", owhere);
      const auto b = field<std::vector<int>>(jo, "bbox", owhere);
      if (b.size() != 4) throw DataError(owhere + ": key 'bbox' must have 4 entries");
      obj.bbox = {b[0], b[1], b[2], b[3]};
      if (!obj.bbox.valid()) throw DataError(owhere + ": key 'bbox' is empty or inverted");
      if (obj.class_id < 0 || std::size_t(obj.class_id) >= m.classes.size())
        throw DataError(owhere + ": key 'class_id' out of range");
      if (jo.contains("gt_mask")) obj.gt_mask = field<std::string>(jo, "gt_mask", owhere);
      img.objects.push_back(std::move(obj));
    }
    m.images.push_back(std::move(img));
  }
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  json images = json::array();
  for (const ManifestImage& img : m.images) {
    json objects = json::array();
    for (const ManifestObject& o : img.objects) {
      json jo = {{"class_id", o.class_id},
                 {"bbox", {o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1}}};
      if (o.gt_mask) jo["gt_mask"] = *o.gt_mask;
      objects.push_back(std::move(jo));
    }
    images.push_back({{"path", img.path}, {"objects", std::move(objects)}});
  }
  return {{"classes", m.classes}, {"images", std::move(images)}};
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw DataError("manifest '" + path.string() + "': " + e.what());
  }
  return parse_manifest(j);
}

Dataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  Dataset data;
  data.classes = m.classes;
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    const ManifestImage& mi = m.images[i];
    ImageRgb img;
    try {
      img = read_png_rgb(root / mi.path);
    } catch (const ImageIoError& e) {
      throw DataError(e.what());
    }
    for (const ManifestObject& o : mi.objects) {
      if (!img.bounds().contains(o.bbox))
        throw DataError("manifest: bbox outside image '" + mi.path + "'");
      Instance inst{int(i), o.class_id, o.bbox, std::nullopt};
      if (o.gt_mask) {
        try {
          inst.gt_mask = read_mask_png(root / *o.gt_mask);
        } catch (const ImageIoError& e) {
          throw DataError(e.what());
        }
        if (inst.gt_mask->rows() != img.height() || inst.gt_mask->cols() != img.width())
          throw DataError("manifest: gt mask '" + *o.gt_mask + "' differs in size from its image");
      }
      data.instances.push_back(std::move(inst));
    }
    data.images.push_back(std::move(img));
  }
  return data;
}

std::string instance_mask_name(int instance_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "inst_%04d.png", instance_index);
  return buf;
}

namespace {

struct Shape {
  int class_id;
  BinaryMask mask;
  Rect box;
};

Rect tight_box(const BinaryMask& m) {
  Rect r{int(m.cols()), int(m.rows()), 0, 0};
  for (Eigen::Index y = 0; y < m.rows(); ++y)
    for (Eigen::Index x = 0; x < m.cols(); ++x)
      if (m(y, x)) {
        r.x0 = std::min(r.x0, int(x));
        r.y0 = std::min(r.y0, int(y));
        r.x1 = std::max(r.x1, int(x) + 1);
        r.y1 = std::max(r.y1, int(y) + 1);
      }
  return r;
}

Shape random_shape(int width, int height, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 1);
  std::uniform_real_distribution<double> radius(8.0, 22.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int class_id = kind(rng);
  const double rx = radius(rng), ry = radius(rng);
  const double cx = rx + 2 + unit(rng) * (width - 2 * rx - 4);
  const double cy = ry + 2 + unit(rng) * (height - 2 * ry - 4);
  BinaryMask m = BinaryMask::Zero(height, width);

  if (class_id == 0) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        m(y, x) = dx * dx + dy * dy <= 1.0;
      }
  } else {
    std::uniform_int_distribution<int> sides(5, 8);
    const int n = sides(rng);
    std::vector<double> angles(n);
    for (double& a : angles) a = unit(rng) * 2 * std::numbers::pi;
    std::sort(angles.begin(), angles.end());
    std::vector<std::array<double, 2>> vs;
    for (double a : angles) vs.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    // Vertices on an ellipse in angular order form a convex, counter-clockwise polygon.
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        bool inside = true;
        for (int k = 0; k < n && inside; ++k) {
          const auto& a = vs[k];
          const auto& b = vs[(k + 1) % n];
          inside = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]) >= 0;
        }
        m(y, x) = inside;
      }
  }
  return {class_id, m, tight_box(m)};
}

ImageRgb::Pixel random_color(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> c(lo, hi);
  return {std::uint8_t(c(rng)), std::uint8_t(c(rng)), std::uint8_t(c(rng))};
}

double color_distance(ImageRgb::Pixel a, ImageRgb::Pixel b) {
  double s = 0;
  for (int i = 0; i < 3; ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return std::sqrt(s);
}

}  // namespace

DatasetManifest write_synthetic_corpus(const fs::path& out_dir, const SynthOptions& opts) {
  if (opts.count < 1) throw std::invalid_argument("synth: count must be >= 1");
  if (opts.width < 48 || opts.height < 48) throw std::invalid_argument("synth: image too small");
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "masks", ec);
  if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> noise(-12, 12);
  std::uniform_int_distribution<int> shape_count(1, 3);
  DatasetManifest manifest;
  manifest.classes = {"ellipse", "polygon"};

  for (int i = 0; i < opts.count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "img_%04d", i);
    const ImageRgb::Pixel bg = random_color(rng, 20, 90);

    std::vector<Shape> shapes;
    const int wanted = shape_count(rng);
    for (int attempt = 0; attempt < 200 && int(shapes.size()) < wanted; ++attempt) {
      Shape s = random_shape(opts.width, opts.height, rng);
      if (!s.box.valid() || s.mask.cast<int>().sum() < 30) continue;
      const Rect padded{s.box.x0 - 2, s.box.y0 - 2, s.box.x1 + 2, s.box.y1 + 2};
      const bool clear = std::none_of(shapes.begin(), shapes.end(), [&](const Shape& o) {
        return intersect(padded, o.box).valid();
      });
      if (clear) shapes.push_back(std::move(s));
    }

    std::vector<ImageRgb::Pixel> colors;
    for (std::size_t s = 0; s < shapes.size(); ++s) {
      ImageRgb::Pixel c;
      do c = random_color(rng, 100, 255);
      while (color_distance(c, bg) < 160 || *std::max_element(c.begin(), c.end()) < 190);
      colors.push_back(c);
    }

    ImageRgb img(opts.width, opts.height);
    for (int y = 0; y < opts.height; ++y) {
      for (int x = 0; x < opts.width; ++x) {
        ImageRgb::Pixel base = bg;
        for (std::size_t s = 0; s < shapes.size(); ++s)
          if (shapes[s].mask(y, x)) base = colors[s];
        ImageRgb::Pixel px;
        for (int c = 0; c < 3; ++c) px[c] = std::uint8_t(std::clamp(base[c] + noise(rng), 0, 255));
        img.set(x, y, px);
      }
    }

    ManifestImage entry;
    entry.path = std::string("images/") + stem + ".png";
    write_png_rgb(out_dir / entry.path, img);
    for (std::size_t s = 0; s < shapes.size(); ++s) {
      const std::string mask_path = "masks/" + std::string(stem) + "_" + std::to_string(s) + ".png";
      write_mask_png(out_dir / mask_path, shapes[s].mask);
      entry.objects.push_back({shapes[s].class_id, shapes[s].box, mask_path});
    }
    manifest.images.push_back(std::move(entry));
  }

  std::ofstream os(out_dir / "manifest.json");
  if (!os) throw DataError("cannot write manifest under '" + out_dir.string() + "'");
  os << manifest_to_json(manifest).dump(2) << '\n';
  return manifest;
}

}  // namespace boxseg
