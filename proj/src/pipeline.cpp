#include "boxseg/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace boxseg {

void Dataset::validate() const {
  for (const Instance& inst : instances) {
    if (inst.image_index < 0 || std::size_t(inst.image_index) >= images.size())
      throw std::invalid_argument("dataset: instance references a missing image");
    const ImageRgb& img = images[inst.image_index];
    if (!inst.box.valid() || !img.bounds().contains(inst.box))
      throw std::invalid_argument("dataset: box outside image bounds");
    if (inst.class_id < 0 || (!classes.empty() && std::size_t(inst.class_id) >= classes.size()))
      throw std::invalid_argument("dataset: class id out of range");
    if (inst.gt_mask && (inst.gt_mask->rows() != img.height() || inst.gt_mask->cols() != img.width()))
      throw std::invalid_argument("dataset: gt mask size differs from image");
  }
}

void PipelineConfig::validate() const {
  if (T < 0) throw std::invalid_argument("pipeline: T must be >= 0");
  if (!(min_fg_fraction >= 0 && min_fg_fraction <= 1))
    throw std::invalid_argument("pipeline: min_fg_fraction must lie in [0, 1]");
  if (!(box_enlarge >= 0)) throw std::invalid_argument("pipeline: box_enlarge must be >= 0");
  if (jobs < 1) throw std::invalid_argument("pipeline: jobs must be >= 1");
  if (!(superpixel.scale > 0)) throw std::invalid_argument("superpixel: scale must be > 0");
  if (superpixel.min_size < 0) throw std::invalid_argument("superpixel: min_size must be >= 0");
  energy.validate();
  segmenter.validate();
}

std::vector<PseudoMask> initialize_pseudo_masks(const Dataset& data) {
  std::vector<PseudoMask> masks;
  masks.reserve(data.instances.size());
  for (std::size_t n = 0; n < data.instances.size(); ++n) {
    const Instance& inst = data.instances[n];
    const ImageRgb& img = data.images[inst.image_index];
    BinaryMask m = BinaryMask::Zero(img.height(), img.width());
    m.block(inst.box.y0, inst.box.x0, inst.box.height(), inst.box.width()).setOnes();
    masks.push_back({int(n), std::move(m), 0});
  }
  return masks;
}

Rect refinement_region(const Instance& inst, const ImageRgb& img, const PipelineConfig& cfg) {
  return enlarge_box(inst.box, cfg.box_enlarge, img.bounds());
}

Refinement refine_from_probability(const Instance& inst, const ImageRgb& img, const RealMap& prob,
                                   const PseudoMask& prev, const PipelineConfig& cfg) {
  Refinement out;
  out.region = refinement_region(inst, img, cfg);
  out.partition = felzenszwalb_segment(img, out.region, cfg.superpixel);
  out.prob = prob;
  out.energy = build_energy(img, out.partition, prob, inst.box, cfg.energy);
  out.labeling = minimize_energy(out.energy);

  BinaryMask mask = BinaryMask::Zero(img.height(), img.width());
  long area = 0;
  for (int id = 0; id < out.partition.size(); ++id) {
    if (!out.labeling[id]) continue;
    for (const PixelCoord& p : out.partition.pixels[id]) {
      if (!inst.box.contains(p.x, p.y)) continue;
      mask(p.y, p.x) = 1;
      ++area;
    }
  }
  out.mask.instance_index = prev.instance_index;
  out.mask.iteration = prev.iteration + 1;
  if (double(area) < cfg.min_fg_fraction * double(inst.box.area())) {
    out.guard_tripped = true;
    out.mask.mask = prev.mask;
  } else {
    out.mask.mask = std::move(mask);
  }
  return out;
}

Refinement refine_pseudo_mask(const Instance& inst, std::span<const RoiPrediction> preds,
                              const ImageRgb& img, const PseudoMask& prev,
                              const PipelineConfig& cfg) {
  const Rect region = refinement_region(inst, img, cfg);
  const RealMap prob = fuse_roi_probabilities(preds, inst.box, inst.class_id, region, cfg.energy);
  return refine_from_probability(inst, img, prob, prev, cfg);
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mask_iou: size mismatch");
  const auto fa = a != 0, fb = b != 0;
  const long inter = (fa && fb).count();
  const long uni = (fa || fb).count();
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

MaskEvaluation evaluate_masks(std::span<const BinaryMask> masks, std::span<const Instance> instances) {
  if (masks.size() != instances.size())
    throw std::invalid_argument("evaluate_masks: mask count differs from instance count");
  MaskEvaluation ev;
  double sum = 0.0;
  int counted = 0;
  for (std::size_t n = 0; n < instances.size(); ++n) {
    if (!instances[n].gt_mask) {
      ev.per_instance.emplace_back();
      ++ev.skipped;
      continue;
    }
    const double v = mask_iou(masks[n], *instances[n].gt_mask);
    ev.per_instance.emplace_back(v);
    sum += v;
    ++counted;
  }
  ev.mean_iou = counted ? sum / counted : 0.0;
  return ev;
}

MaskEvaluation evaluate_masks(std::span<const PseudoMask> masks, std::span<const Instance> instances) {
  std::vector<BinaryMask> raw;
  raw.reserve(masks.size());
  for (const PseudoMask& m : masks) raw.push_back(m.mask);
  return evaluate_masks(std::span<const BinaryMask>(raw), instances);
}

std::vector<Rect> refinement_rois(const Instance& inst, int instance_index, int iteration,
                                  const Rect& bounds, const SegmenterConfig& cfg) {
  // Seeded per (instance, iteration) so results do not depend on processing order.
  std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32),
                    std::uint32_t(instance_index), std::uint32_t(iteration), 0x5eedU};
  std::mt19937_64 rng(seq);
  std::vector<Rect> rois;
  for (const RoiSample& s : sample_rois(inst.box, inst.class_id, instance_index, bounds, cfg, rng))
    rois.push_back(s.roi);
  return rois;
}

namespace {

std::vector<TrainingInstance> training_set(const Dataset& data, const std::vector<PseudoMask>& masks) {
  std::vector<TrainingInstance> out;
  out.reserve(data.instances.size());
  for (std::size_t n = 0; n < data.instances.size(); ++n) {
    const Instance& inst = data.instances[n];
    out.push_back({inst.image_index, inst.class_id, inst.box, masks[n].mask});
  }
  return out;
}

SegmenterConfig round_config(const PipelineConfig& cfg, int iteration, int num_classes) {
  SegmenterConfig sc = cfg.segmenter;
  sc.num_classes = std::max(sc.num_classes, num_classes);
  sc.seed = cfg.segmenter.seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(iteration);
  return sc;
}

template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<IterationResult> run_algorithm1(const Dataset& data, const PipelineConfig& cfg,
                                            const IterationCallback& on_iteration) {
  data.validate();
  cfg.validate();
  const int num_classes = std::max<int>(1, int(data.classes.size()));

  std::vector<FeatureMap> features;
  features.reserve(data.images.size());
  for (const ImageRgb& img : data.images) features.push_back(pixel_features(img));

  std::vector<IterationResult> results;
  std::vector<PseudoMask> masks = initialize_pseudo_masks(data);
  auto learn = [&](int iteration, int guard_trips) {
    IterationResult r;
    r.iteration = iteration;
    TrainResult trained = train(data.images, features, training_set(data, masks),
                                round_config(cfg, iteration, num_classes));
    r.params = std::move(trained.params);
    r.trace = std::move(trained.trace);
    r.masks = masks;
    r.eval = evaluate_masks(std::span<const PseudoMask>(masks), data.instances);
    r.guard_trips = guard_trips;
    results.push_back(std::move(r));
    if (on_iteration) on_iteration(results.back());
  };

  learn(0, 0);
  for (int t = 1; t <= cfg.T; ++t) {
    const SegmenterParams& prev_params = results.back().params;
    std::vector<PseudoMask> refined(masks.size());
    std::vector<char> tripped(masks.size(), 0);
    parallel_for(masks.size(), cfg.jobs, [&](std::size_t n) {
      const Instance& inst = data.instances[n];
      const ImageRgb& img = data.images[inst.image_index];
      std::vector<RoiPrediction> preds;
      for (const Rect& roi : refinement_rois(inst, int(n), t, img.bounds(), cfg.segmenter))
        preds.push_back(predict_roi(sample_roi_features(features[inst.image_index], roi, prev_params.k),
                                    prev_params, inst.class_id));
      Refinement ref = refine_pseudo_mask(inst, preds, img, masks[n], cfg);
      tripped[n] = ref.guard_tripped;
      refined[n] = std::move(ref.mask);
    });
    masks = std::move(refined);
    int trips = 0;
    for (char c : tripped) trips += c;
    learn(t, trips);
  }
  return results;
}

}  // namespace boxseg
