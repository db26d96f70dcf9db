#pragma once

#include "boxseg/energy.hpp"
#include "boxseg/imaging.hpp"
#include "boxseg/maxflow.hpp"
#include "boxseg/segmenter.hpp"
#include "boxseg/superpixel.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace boxseg {

/// One annotated object. `gt_mask` is only used for evaluation.
struct Instance {
  int image_index = 0;
  int class_id = 0;
  Rect box;
  std::optional<BinaryMask> gt_mask;
};

struct Dataset {
  std::vector<ImageRgb> images;
  std::vector<Instance> instances;
  std::vector<std::string> classes;

  void validate() const;
};

/// Full-image binary mask for one instance; never has foreground outside its box.
struct PseudoMask {
  int instance_index = 0;
  BinaryMask mask;
  int iteration = 0;
};

struct PipelineConfig {
  int T = 3;
  EnergyConfig energy;
  SegmenterConfig segmenter;
  SuperpixelParams superpixel;
  /// Refinements with less foreground than this fraction of the box keep the previous mask.
  double min_fg_fraction = 0.05;
  double box_enlarge = 0.2;
  /// Worker threads for the per-instance refinement fan-out.
  int jobs = 1;

  void validate() const;
};

std::vector<PseudoMask> initialize_pseudo_masks(const Dataset& data);

/// Everything the refinement step produced, for inspection and testing.
struct Refinement {
  PseudoMask mask;
  bool guard_tripped = false;
  Rect region;
  SuperpixelPartition partition;
  RealMap prob;
  InstanceEnergy energy;
  Labeling labeling;
};

Rect refinement_region(const Instance& inst, const ImageRgb& img, const PipelineConfig& cfg);

/// Graph-cut refinement given a foreground probability map over
/// refinement_region(inst, img, cfg).
Refinement refine_from_probability(const Instance& inst, const ImageRgb& img, const RealMap& prob,
                                   const PseudoMask& prev, const PipelineConfig& cfg);

/// Fuses `preds` for the instance and refines its mask.
Refinement refine_pseudo_mask(const Instance& inst, std::span<const RoiPrediction> preds,
                              const ImageRgb& img, const PseudoMask& prev,
                              const PipelineConfig& cfg);

/// |a & b| / |a | b|; two empty masks score 1.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

struct MaskEvaluation {
  double mean_iou = 0.0;
  std::vector<std::optional<double>> per_instance;
  /// Instances without a ground-truth mask.
  int skipped = 0;
};

MaskEvaluation evaluate_masks(std::span<const BinaryMask> masks, std::span<const Instance> instances);
MaskEvaluation evaluate_masks(std::span<const PseudoMask> masks, std::span<const Instance> instances);

struct IterationResult {
  int iteration = 0;
  SegmenterParams params;
  std::vector<EpochLoss> trace;
  std::vector<PseudoMask> masks;
  MaskEvaluation eval;
  int guard_trips = 0;
};

using IterationCallback = std::function<void(const IterationResult&)>;

/// Box initialisation, then T rounds of (refine masks with the previous
/// segmenter, retrain). Iteration 0 holds the box masks and the first
/// segmenter. `on_iteration` runs as soon as each iteration completes.
std::vector<IterationResult> run_algorithm1(const Dataset& data, const PipelineConfig& cfg,
                                            const IterationCallback& on_iteration = {});

/// ROIs used to predict an instance's mask at refinement time.
std::vector<Rect> refinement_rois(const Instance& inst, int instance_index, int iteration,
                                  const Rect& bounds, const SegmenterConfig& cfg);

}  // namespace boxseg
