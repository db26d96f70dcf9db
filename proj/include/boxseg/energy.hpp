#pragma once

#include "boxseg/imaging.hpp"
#include "boxseg/superpixel.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace boxseg {

struct EnergyConfig {
  double delta_c = 5.0;
  double delta_t = 10.0;
  /// Weight of the pairwise term relative to the unaries.
  double lambda = 1.0;
  double prob_clamp_eps = 1e-6;
  /// Foreground probability for pixels that no contributing ROI covers.
  double uncovered_prior = 0.5;

  void validate() const;
};

inline constexpr int kRoiGrid = 28;

/// Per-ROI output of the segmenter: 28x28 foreground probabilities over `roi`.
/// `logits28` carries the pre-sigmoid values when the prediction came from
/// the segmenter; it may be left empty for externally supplied maps.
struct RoiPrediction {
  Rect roi;
  int class_id = 0;
  RealMap fg28;
  RealMap logits28;
};

struct UnaryCost {
  double cost_bg = 0.0;
  double cost_fg = 0.0;
  /// Superpixel lies wholly outside the box: labelling it foreground is infeasible.
  bool hard_bg = false;
};

struct PairwiseWeight {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

/// Binary labelling energy  sum_i U(y_i) + sum_(i,j) w_ij [y_i != y_j].
struct InstanceEnergy {
  int n = 0;
  std::vector<UnaryCost> unary;
  std::vector<PairwiseWeight> pairwise;
};

/// Labels: 1 = foreground, 0 = background.
using Labeling = std::vector<std::uint8_t>;

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

double iou(const Rect& a, const Rect& b);

/// Mean of the bilinearly upsampled fg28 maps of every prediction with the
/// requested class and IoU(roi, gt_box) > 0.5, evaluated over `region`.
/// Pixels no contributor covers take `cfg.uncovered_prior`.
RealMap fuse_roi_probabilities(std::span<const RoiPrediction> preds, const Rect& gt_box,
                               int class_id, const Rect& region, const EnergyConfig& cfg);

/// `prob` is region-sized over `part.region`.
std::vector<UnaryCost> unary_terms(const SuperpixelPartition& part, const RealMap& prob,
                                   const Rect& gt_box, const EnergyConfig& cfg);

double pairwise_term(const Histogram& hi, const Histogram& hj, const EnergyConfig& cfg);

InstanceEnergy build_energy(const SuperpixelPartition& part, std::span<const Histogram> hists,
                            const RealMap& prob, const Rect& gt_box, const EnergyConfig& cfg);

InstanceEnergy build_energy(const ImageRgb& img, const SuperpixelPartition& part,
                            const RealMap& prob, const Rect& gt_box, const EnergyConfig& cfg);

/// Returns kInfiniteEnergy if a hard-background id is labelled foreground.
double evaluate_energy(const InstanceEnergy& e, const Labeling& labeling);

}  // namespace boxseg
