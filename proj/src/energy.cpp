#include "boxseg/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boxseg {

void EnergyConfig::validate() const {
  if (!(delta_c > 0) || !(delta_t > 0))
    throw std::invalid_argument("energy: delta_c and delta_t must be positive");
  if (!(lambda >= 0)) throw std::invalid_argument("energy: lambda must be >= 0");
  if (!(prob_clamp_eps > 0 && prob_clamp_eps < 0.5))
    throw std::invalid_argument("energy: prob_clamp_eps must lie in (0, 0.5)");
  if (!(uncovered_prior > 0 && uncovered_prior < 1))
    throw std::invalid_argument("energy: uncovered_prior must lie in (0, 1)");
}

double iou(const Rect& a, const Rect& b) {
  const double inter = double(intersect(a, b).area());
  const double uni = double(a.area()) + double(b.area()) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

RealMap fuse_roi_probabilities(std::span<const RoiPrediction> preds, const Rect& gt_box,
                               int class_id, const Rect& region, const EnergyConfig& cfg) {
  RealMap sum = RealMap::Zero(region.height(), region.width());
  RealMap count = RealMap::Zero(region.height(), region.width());
  for (const RoiPrediction& pred : preds) {
    if (pred.class_id != class_id || !(iou(pred.roi, gt_box) > 0.5)) continue;
    const Rect overlap = intersect(pred.roi, region);
    if (!overlap.valid()) continue;
    const RealMap up =
        resample_bilinear(pred.fg28, full_rect(pred.fg28), pred.roi.width(), pred.roi.height());
    const int ox = overlap.x0 - region.x0, oy = overlap.y0 - region.y0;
    const int w = overlap.width(), h = overlap.height();
    sum.block(oy, ox, h, w) += up.block(overlap.y0 - pred.roi.y0, overlap.x0 - pred.roi.x0, h, w);
    count.block(oy, ox, h, w) += 1.0;
  }
  RealMap out = (count > 0).select(sum / count.max(1.0), cfg.uncovered_prior);
  return out.min(1.0).max(0.0);
}

std::vector<UnaryCost> unary_terms(const SuperpixelPartition& part, const RealMap& prob,
                                   const Rect& gt_box, const EnergyConfig& cfg) {
  if (prob.rows() != part.region.height() || prob.cols() != part.region.width())
    throw std::invalid_argument("unary_terms: probability map does not match partition region");
  const double lo = cfg.prob_clamp_eps, hi = 1.0 - cfg.prob_clamp_eps;
  std::vector<UnaryCost> out(part.pixels.size());
  for (std::size_t id = 0; id < part.pixels.size(); ++id) {
    UnaryCost& u = out[id];
    bool inside_any = false;
    for (const PixelCoord& p : part.pixels[id]) {
      if (!gt_box.contains(p.x, p.y)) continue;
      inside_any = true;
      const double q = std::clamp(prob(p.y - part.region.y0, p.x - part.region.x0), lo, hi);
      u.cost_fg -= std::log(q);
      u.cost_bg -= std::log1p(-q);
    }
    u.hard_bg = !inside_any;
  }
  return out;
}

double pairwise_term(const Histogram& hi, const Histogram& hj, const EnergyConfig& cfg) {
  const double dc = (hi.color - hj.color).squaredNorm();
  const double dt = (hi.texture - hj.texture).squaredNorm();
  return cfg.lambda *
         std::exp(-dc / (cfg.delta_c * cfg.delta_c) - dt / (cfg.delta_t * cfg.delta_t));
}

InstanceEnergy build_energy(const SuperpixelPartition& part, std::span<const Histogram> hists,
                            const RealMap& prob, const Rect& gt_box, const EnergyConfig& cfg) {
  cfg.validate();
  if (hists.size() != part.pixels.size())
    throw std::invalid_argument("build_energy: histogram count does not match partition");
  InstanceEnergy e;
  e.n = part.size();
  e.unary = unary_terms(part, prob, gt_box, cfg);
  e.pairwise.reserve(part.adjacency.size());
  for (const auto& [i, j] : part.adjacency)
    e.pairwise.push_back({i, j, pairwise_term(hists[i], hists[j], cfg)});
  return e;
}

InstanceEnergy build_energy(const ImageRgb& img, const SuperpixelPartition& part,
                            const RealMap& prob, const Rect& gt_box, const EnergyConfig& cfg) {
  const auto hists = build_histograms(img, part);
  return build_energy(part, hists, prob, gt_box, cfg);
}

double evaluate_energy(const InstanceEnergy& e, const Labeling& labeling) {
  if (labeling.size() != std::size_t(e.n))
    throw std::invalid_argument("evaluate_energy: labeling size mismatch");
  double total = 0.0;
  for (int i = 0; i < e.n; ++i) {
    const UnaryCost& u = e.unary[i];
    if (labeling[i]) {
      if (u.hard_bg) return kInfiniteEnergy;
      total += u.cost_fg;
    } else {
      total += u.cost_bg;
    }
  }
  for (const PairwiseWeight& p : e.pairwise)
    if (labeling[p.i] != labeling[p.j]) total += p.w;
  return total;
}

}  // namespace boxseg
