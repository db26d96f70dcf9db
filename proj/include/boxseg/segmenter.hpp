#pragma once

#include "boxseg/energy.hpp"
#include "boxseg/imaging.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace boxseg {

inline constexpr int kFeatureDim = 9;
inline constexpr int kRoiCells = kRoiGrid * kRoiGrid;

template <class Scalar>
using FeatureRows = Eigen::Matrix<Scalar, Eigen::Dynamic, kFeatureDim, Eigen::RowMajor>;

/// Per-pixel features, one row per pixel in raster order:
/// r, g, b in [0,1]; |gx|, |gy| of the grayscale; x/W; y/H; (x/W)(y/H); 1.
struct FeatureMap {
  int width = 0;
  int height = 0;
  FeatureRows<double> values;

  auto at(int x, int y) const { return values.row(Eigen::Index(y) * width + x); }
};

FeatureMap pixel_features(const ImageRgb& img);

struct SegmenterConfig {
  int k = 7;
  int num_classes = 1;
  double learning_rate = 10.0;
  int epochs = 100;
  int batch_rois = 32;
  std::uint64_t seed = 7;
  int jitters_per_instance = 8;
  double jitter_scale_min = 0.7;
  double jitter_scale_max = 1.3;
  /// Translation range as a fraction of the box side.
  double jitter_shift = 0.2;
  double loss_1d_weight = 1.0;

  void validate() const;
};

/// Linear 1x1 scorer producing k*k*C score maps. Map index for cell m and
/// class c is c*k*k + m; cells are numbered row-major (m = row*k + col).
struct SegmenterParams {
  int k = 7;
  int num_classes = 1;
  Eigen::MatrixXd weights;  ///< (k*k*C) x kFeatureDim
  Eigen::VectorXd biases;   ///< k*k*C

  static SegmenterParams zeros(int k, int num_classes);
  int map_count() const { return k * k * num_classes; }
  int map_index(int cell, int class_id) const { return class_id * k * k + cell; }
};

/// Raw logit maps, one per (cell, class).
std::vector<RealMap> score_maps(const FeatureMap& features, const SegmenterParams& params);

/// Score-map cell that grid position (u = column, v = row) reads from.
inline int roi_cell(int u, int v, int k) {
  return (v * k / kRoiGrid) * k + (u * k / kRoiGrid);
}

/// Position-sensitive assembly: grid position (u,v) samples map (cell, class)
/// bilinearly at its image point inside `roi`; probabilities are sigmoids.
RoiPrediction assemble_roi(std::span<const RealMap> maps, const Rect& roi, int class_id, int k);

struct LossAndGrad {
  double loss = 0.0;
  RealMap grad;  ///< d loss / d logit, 28x28
};

/// Mean per-position sigmoid cross-entropy against a 28x28 target.
LossAndGrad loss_2d(const RoiPrediction& pred, const BinaryMask& target28);

struct Projection {
  Eigen::VectorXd rows;  ///< rows[v] = max over u
  Eigen::VectorXd cols;  ///< cols[u] = max over v
};

Projection project_1d(const RealMap& map28);

/// Row v (resp. column u) targets 1 iff its nearest-sampled image line
/// crosses `gt_box` inside the ROI. Cross-entropy is averaged over the 56
/// max-projections; the gradient flows to the first argmax in raster order.
LossAndGrad loss_1d(const RoiPrediction& pred, const Rect& gt_box);

std::pair<Eigen::VectorXd, Eigen::VectorXd> loss_1d_targets(const Rect& roi, const Rect& gt_box);

/// Features bilinearly sampled at the 784 grid points of an ROI. Logits of
/// the assembled prediction are linear in these rows.
struct RoiFeatures {
  Rect roi;
  FeatureRows<double> phi;        ///< 784 x kFeatureDim, row = v*28 + u
  std::vector<int> cell;          ///< 784 cell indices
};

RoiFeatures sample_roi_features(const FeatureMap& features, const Rect& roi, int k);

/// Equal to assemble_roi(score_maps(features, params), roi, class_id, k).
RoiPrediction predict_roi(const RoiFeatures& sampled, const SegmenterParams& params, int class_id);

std::vector<RoiPrediction> predict_rois(const ImageRgb& img, const SegmenterParams& params,
                                        std::span<const Rect> rois, int class_id);

/// One supervised instance: its image, class, box and current pseudo mask.
struct TrainingInstance {
  int image_index = 0;
  int class_id = 0;
  Rect box;
  BinaryMask mask;  ///< full-image pseudo mask
};

struct RoiSample {
  Rect roi;
  std::optional<int> matched_instance;
  int class_id = 0;
};

/// Random scale/translation perturbation of `box`, clamped to `bounds`.
Rect jitter_box(const Rect& box, const Rect& bounds, const SegmenterConfig& cfg,
                std::mt19937_64& rng);

/// The box itself followed by `cfg.jitters_per_instance` jittered copies;
/// samples with IoU > 0.5 against the box are matched to `instance_index`.
std::vector<RoiSample> sample_rois(const Rect& box, int class_id, int instance_index,
                                   const Rect& bounds, const SegmenterConfig& cfg,
                                   std::mt19937_64& rng);

struct RoiLoss {
  double loss_2d = 0.0;
  double loss_1d = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_biases;
};

/// Loss of one matched ROI, loss_2d + w * loss_1d, and its parameter gradient.
RoiLoss roi_loss(const FeatureMap& features, const Rect& roi, const TrainingInstance& inst,
                 const SegmenterParams& params, const SegmenterConfig& cfg);

struct EpochLoss {
  int epoch = 0;
  double loss_2d = 0.0;
  double loss_1d = 0.0;
};

struct TrainResult {
  SegmenterParams params;
  std::vector<EpochLoss> trace;
};

/// SGD from zero parameters; minibatches of matched ROIs drawn from each
/// instance's box and its jitters. Deterministic for a fixed seed.
TrainResult train(std::span<const ImageRgb> images, std::span<const TrainingInstance> instances,
                  const SegmenterConfig& cfg);

/// Same, reusing precomputed per-image features.
TrainResult train(std::span<const ImageRgb> images, std::span<const FeatureMap> features,
                  std::span<const TrainingInstance> instances, const SegmenterConfig& cfg);

// Checkpoint: "PMSK", u32 version, u32 k, u32 C, u32 d, then weights
// (row-major) and biases as little-endian f64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const SegmenterParams& params);
SegmenterParams read_checkpoint(std::istream& is);
void write_checkpoint(const std::filesystem::path& path, const SegmenterParams& params);
SegmenterParams read_checkpoint(const std::filesystem::path& path);

double sigmoid(double z);

}  // namespace boxseg
