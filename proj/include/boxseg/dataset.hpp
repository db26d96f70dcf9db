#pragma once

#include "boxseg/pipeline.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxseg {

/// Malformed manifest, config or dataset file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Manifest JSON:
// {
//   "classes": ["ellipse", "polygon"],
//   "images": [
//     {"path": "images/img_0000.png",
//      "objects": [{"class_id": 0, "bbox": [x0, y0, x1, y1],
//                   "gt_mask": "masks/img_0000_0.png"}]}
//   ]
// }
// Paths are relative to the manifest's directory; bbox is half-open.
struct ManifestObject {
  int class_id = 0;
  Rect bbox;
  std::optional<std::string> gt_mask;
};

struct ManifestImage {
  std::string path;
  std::vector<ManifestObject> objects;
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<ManifestImage> images;
};

DatasetManifest parse_manifest(const nlohmann::json& j);
nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Loads images and ground-truth masks; instances are numbered in manifest order.
Dataset load_dataset(const std::filesystem::path& manifest_path);

struct SynthOptions {
  int count = 50;
  std::uint64_t seed = 7;
  int width = 96;
  int height = 96;
};

/// Writes images/, masks/ and manifest.json under `out_dir`. Each image has
/// a noisy uniform background and 1-3 disjoint filled ellipses (class 0) or
/// convex polygons (class 1) of contrasting color; boxes are tight.
DatasetManifest write_synthetic_corpus(const std::filesystem::path& out_dir,
                                       const SynthOptions& opts);

std::string instance_mask_name(int instance_index);

}  // namespace boxseg
