#include "boxseg/segmenter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace boxseg {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// Binary cross-entropy of sigmoid(z) against t, computed on the logit.
double bce_logit(double z, double t) { return softplus(z) - t * z; }

RealMap logits_of(const RoiPrediction& pred) {
  if (pred.logits28.size() == kRoiCells) return pred.logits28;
  const RealMap p = pred.fg28.max(1e-12).min(1.0 - 1e-12);
  return (p / (1.0 - p)).log();
}

struct Bilinear {
  int x0, x1, y0, y1;
  double fx, fy;
};

Bilinear bilinear_at(int u, int v, const Rect& roi, int width, int height) {
  const double sx =
      std::clamp(grid_to_source(u, roi.x0, roi.width(), kRoiGrid), 0.0, double(width - 1));
  const double sy =
      std::clamp(grid_to_source(v, roi.y0, roi.height(), kRoiGrid), 0.0, double(height - 1));
  Bilinear b;
  b.x0 = int(std::floor(sx));
  b.y0 = int(std::floor(sy));
  b.x1 = std::min(b.x0 + 1, width - 1);
  b.y1 = std::min(b.y0 + 1, height - 1);
  b.fx = sx - b.x0;
  b.fy = sy - b.y0;
  return b;
}

Rect checked_roi(const Rect& roi, int width, int height) {
  const Rect r = intersect(roi, Rect{0, 0, width, height});
  if (!r.valid()) throw std::invalid_argument("ROI does not overlap the image");
  return r;
}

}  // namespace

FeatureMap pixel_features(const ImageRgb& img) {
  const int w = img.width(), h = img.height();
  const Gradients grad = gradients(to_grayscale(img));
  FeatureMap f;
  f.width = w;
  f.height = h;
  f.values.resize(Eigen::Index(w) * h, kFeatureDim);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto p = img.at(x, y);
      const double xn = double(x) / w, yn = double(y) / h;
      f.values.row(Eigen::Index(y) * w + x) << p[0] / 255.0, p[1] / 255.0, p[2] / 255.0,
          std::min(1.0, std::abs(grad.gx(y, x))), std::min(1.0, std::abs(grad.gy(y, x))), xn, yn,
          xn * yn, 1.0;
    }
  }
  return f;
}

void SegmenterConfig::validate() const {
  if (k < 1) throw std::invalid_argument("segmenter: k must be >= 1");
  if (num_classes < 1) throw std::invalid_argument("segmenter: num_classes must be >= 1");
  if (epochs < 0) throw std::invalid_argument("segmenter: epochs must be >= 0");
  if (batch_rois < 1) throw std::invalid_argument("segmenter: batch_rois must be >= 1");
  if (jitters_per_instance < 0)
    throw std::invalid_argument("segmenter: jitters_per_instance must be >= 0");
  if (!(jitter_scale_min > 0 && jitter_scale_min <= jitter_scale_max))
    throw std::invalid_argument("segmenter: bad jitter scale range");
  if (!(jitter_shift >= 0)) throw std::invalid_argument("segmenter: jitter_shift must be >= 0");
  if (!(learning_rate > 0)) throw std::invalid_argument("segmenter: learning_rate must be > 0");
}

SegmenterParams SegmenterParams::zeros(int k, int num_classes) {
  SegmenterParams p;
  p.k = k;
  p.num_classes = num_classes;
  p.weights = Eigen::MatrixXd::Zero(p.map_count(), kFeatureDim);
  p.biases = Eigen::VectorXd::Zero(p.map_count());
  return p;
}

std::vector<RealMap> score_maps(const FeatureMap& features, const SegmenterParams& params) {
  const Eigen::MatrixXd all =
      (features.values * params.weights.transpose()).rowwise() + params.biases.transpose();
  std::vector<RealMap> maps;
  maps.reserve(params.map_count());
  for (int m = 0; m < params.map_count(); ++m) {
    RealMap map(features.height, features.width);
    for (Eigen::Index i = 0; i < all.rows(); ++i) map.data()[i] = all(i, m);
    maps.push_back(std::move(map));
  }
  return maps;
}

RoiPrediction assemble_roi(std::span<const RealMap> maps, const Rect& roi, int class_id, int k) {
  if (maps.empty()) throw std::invalid_argument("assemble_roi: no score maps");
  const std::size_t per_class = std::size_t(k) * k;
  if (maps.size() < per_class * (class_id + 1))
    throw std::invalid_argument("assemble_roi: class has no score maps");
  const int w = int(maps.front().cols()), h = int(maps.front().rows());
  const Rect r = checked_roi(roi, w, h);

  RoiPrediction pred;
  pred.roi = r;
  pred.class_id = class_id;
  pred.logits28.resize(kRoiGrid, kRoiGrid);
  for (int v = 0; v < kRoiGrid; ++v) {
    for (int u = 0; u < kRoiGrid; ++u) {
      const RealMap& map = maps[per_class * class_id + roi_cell(u, v, k)];
      const Bilinear b = bilinear_at(u, v, r, w, h);
      const double top = (1 - b.fx) * map(b.y0, b.x0) + b.fx * map(b.y0, b.x1);
      const double bot = (1 - b.fx) * map(b.y1, b.x0) + b.fx * map(b.y1, b.x1);
      pred.logits28(v, u) = (1 - b.fy) * top + b.fy * bot;
    }
  }
  pred.fg28 = pred.logits28.unaryExpr([](double z) { return sigmoid(z); });
  return pred;
}

LossAndGrad loss_2d(const RoiPrediction& pred, const BinaryMask& target28) {
  if (target28.rows() != kRoiGrid || target28.cols() != kRoiGrid)
    throw std::invalid_argument("loss_2d: target must be 28x28");
  const RealMap z = logits_of(pred);
  LossAndGrad out{0.0, RealMap(kRoiGrid, kRoiGrid)};
  for (int v = 0; v < kRoiGrid; ++v) {
    for (int u = 0; u < kRoiGrid; ++u) {
      const double t = target28(v, u) ? 1.0 : 0.0;
      out.loss += bce_logit(z(v, u), t);
      out.grad(v, u) = (sigmoid(z(v, u)) - t) / kRoiCells;
    }
  }
  out.loss /= kRoiCells;
  return out;
}

Projection project_1d(const RealMap& map28) {
  return {map28.rowwise().maxCoeff().matrix(), map28.colwise().maxCoeff().transpose().matrix()};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> loss_1d_targets(const Rect& roi, const Rect& gt_box) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(kRoiGrid);
  Eigen::VectorXd cols = Eigen::VectorXd::Zero(kRoiGrid);
  const bool x_overlap = roi.x0 < gt_box.x1 && gt_box.x0 < roi.x1;
  const bool y_overlap = roi.y0 < gt_box.y1 && gt_box.y0 < roi.y1;
  for (int i = 0; i < kRoiGrid; ++i) {
    const int y = grid_to_source_nearest(i, roi.y0, roi.height(), kRoiGrid);
    const int x = grid_to_source_nearest(i, roi.x0, roi.width(), kRoiGrid);
    rows(i) = x_overlap && y >= gt_box.y0 && y < gt_box.y1 ? 1.0 : 0.0;
    cols(i) = y_overlap && x >= gt_box.x0 && x < gt_box.x1 ? 1.0 : 0.0;
  }
  return {rows, cols};
}

LossAndGrad loss_1d(const RoiPrediction& pred, const Rect& gt_box) {
  const RealMap z = logits_of(pred);
  const auto [row_t, col_t] = loss_1d_targets(pred.roi, gt_box);
  constexpr double kScale = 1.0 / (2 * kRoiGrid);
  LossAndGrad out{0.0, RealMap::Zero(kRoiGrid, kRoiGrid)};
  // sigmoid is monotone, so the argmax of the probabilities is the argmax of the logits.
  for (int v = 0; v < kRoiGrid; ++v) {
    int best = 0;
    for (int u = 1; u < kRoiGrid; ++u)
      if (z(v, u) > z(v, best)) best = u;
    out.loss += bce_logit(z(v, best), row_t(v));
    out.grad(v, best) += (sigmoid(z(v, best)) - row_t(v)) * kScale;
  }
  for (int u = 0; u < kRoiGrid; ++u) {
    int best = 0;
    for (int v = 1; v < kRoiGrid; ++v)
      if (z(v, u) > z(best, u)) best = v;
    out.loss += bce_logit(z(best, u), col_t(u));
    out.grad(best, u) += (sigmoid(z(best, u)) - col_t(u)) * kScale;
  }
  out.loss *= kScale;
  return out;
}

RoiFeatures sample_roi_features(const FeatureMap& features, const Rect& roi, int k) {
  RoiFeatures s;
  s.roi = checked_roi(roi, features.width, features.height);
  s.phi.resize(kRoiCells, kFeatureDim);
  s.cell.resize(kRoiCells);
  for (int v = 0; v < kRoiGrid; ++v) {
    for (int u = 0; u < kRoiGrid; ++u) {
      const Bilinear b = bilinear_at(u, v, s.roi, features.width, features.height);
      const int i = v * kRoiGrid + u;
      s.phi.row(i) = (1 - b.fy) * ((1 - b.fx) * features.at(b.x0, b.y0) + b.fx * features.at(b.x1, b.y0)) +
                     b.fy * ((1 - b.fx) * features.at(b.x0, b.y1) + b.fx * features.at(b.x1, b.y1));
      s.cell[i] = roi_cell(u, v, k);
    }
  }
  return s;
}

RoiPrediction predict_roi(const RoiFeatures& sampled, const SegmenterParams& params, int class_id) {
  RoiPrediction pred;
  pred.roi = sampled.roi;
  pred.class_id = class_id;
  pred.logits28.resize(kRoiGrid, kRoiGrid);
  for (int i = 0; i < kRoiCells; ++i) {
    const int m = params.map_index(sampled.cell[i], class_id);
    pred.logits28.data()[i] = params.weights.row(m).dot(sampled.phi.row(i)) + params.biases(m);
  }
  pred.fg28 = pred.logits28.unaryExpr([](double z) { return sigmoid(z); });
  return pred;
}

std::vector<RoiPrediction> predict_rois(const ImageRgb& img, const SegmenterParams& params,
                                        std::span<const Rect> rois, int class_id) {
  const FeatureMap features = pixel_features(img);
  std::vector<RoiPrediction> preds;
  preds.reserve(rois.size());
  for (const Rect& roi : rois)
    preds.push_back(predict_roi(sample_roi_features(features, roi, params.k), params, class_id));
  return preds;
}

Rect jitter_box(const Rect& box, const Rect& bounds, const SegmenterConfig& cfg,
                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(cfg.jitter_scale_min, cfg.jitter_scale_max);
  std::uniform_real_distribution<double> shift(-cfg.jitter_shift, cfg.jitter_shift);
  const double sw = scale(rng), sh = scale(rng), dx = shift(rng), dy = shift(rng);
  const double cx = 0.5 * (box.x0 + box.x1) + dx * box.width();
  const double cy = 0.5 * (box.y0 + box.y1) + dy * box.height();
  const double hw = 0.5 * std::max(1.0, sw * box.width());
  const double hh = 0.5 * std::max(1.0, sh * box.height());
  Rect r{int(std::lround(cx - hw)), int(std::lround(cy - hh)), int(std::lround(cx + hw)),
         int(std::lround(cy + hh))};
  r = intersect(r, bounds);
  if (!r.valid()) return box;
  return r;
}

std::vector<RoiSample> sample_rois(const Rect& box, int class_id, int instance_index,
                                   const Rect& bounds, const SegmenterConfig& cfg,
                                   std::mt19937_64& rng) {
  std::vector<RoiSample> out;
  out.reserve(1 + cfg.jitters_per_instance);
  out.push_back({box, instance_index, class_id});
  for (int j = 0; j < cfg.jitters_per_instance; ++j) {
    const Rect r = jitter_box(box, bounds, cfg, rng);
    RoiSample s{r, std::nullopt, class_id};
    if (iou(r, box) > 0.5) s.matched_instance = instance_index;
    out.push_back(s);
  }
  return out;
}

namespace {

struct SampleGrad {
  double loss_2d;
  double loss_1d;
};

// Accumulates the parameter gradient of one ROI into (gw, gb).
SampleGrad accumulate_roi(const RoiFeatures& sampled, const TrainingInstance& inst,
                          const SegmenterParams& params, const SegmenterConfig& cfg,
                          Eigen::MatrixXd& gw, Eigen::VectorXd& gb) {
  const RoiPrediction pred = predict_roi(sampled, params, inst.class_id);
  const BinaryMask target = resample_nearest(inst.mask, sampled.roi, kRoiGrid, kRoiGrid);
  const LossAndGrad l2 = loss_2d(pred, target);
  const LossAndGrad l1 = loss_1d(pred, inst.box);
  const RealMap g = l2.grad + cfg.loss_1d_weight * l1.grad;
  for (int i = 0; i < kRoiCells; ++i) {
    const double gi = g.data()[i];
    if (gi == 0.0) continue;
    const int m = params.map_index(sampled.cell[i], inst.class_id);
    gw.row(m) += gi * sampled.phi.row(i);
    gb(m) += gi;
  }
  return {l2.loss, l1.loss};
}

}  // namespace

RoiLoss roi_loss(const FeatureMap& features, const Rect& roi, const TrainingInstance& inst,
                 const SegmenterParams& params, const SegmenterConfig& cfg) {
  RoiLoss out;
  out.grad_weights = Eigen::MatrixXd::Zero(params.map_count(), kFeatureDim);
  out.grad_biases = Eigen::VectorXd::Zero(params.map_count());
  const SampleGrad s = accumulate_roi(sample_roi_features(features, roi, params.k), inst, params,
                                      cfg, out.grad_weights, out.grad_biases);
  out.loss_2d = s.loss_2d;
  out.loss_1d = s.loss_1d;
  return out;
}

TrainResult train(std::span<const ImageRgb> images, std::span<const TrainingInstance> instances,
                  const SegmenterConfig& cfg) {
  std::vector<FeatureMap> features;
  features.reserve(images.size());
  for (const ImageRgb& img : images) features.push_back(pixel_features(img));
  return train(images, features, instances, cfg);
}

TrainResult train(std::span<const ImageRgb> images, std::span<const FeatureMap> features,
                  std::span<const TrainingInstance> instances, const SegmenterConfig& cfg) {
  cfg.validate();
  if (instances.empty()) throw std::invalid_argument("train: empty dataset");
  if (features.size() != images.size())
    throw std::invalid_argument("train: feature maps do not match images");
  for (const TrainingInstance& inst : instances) {
    if (inst.image_index < 0 || std::size_t(inst.image_index) >= images.size())
      throw std::invalid_argument("train: instance references a missing image");
    if (inst.class_id < 0 || inst.class_id >= cfg.num_classes)
      throw std::invalid_argument("train: instance class out of range");
  }

  TrainResult result{SegmenterParams::zeros(cfg.k, cfg.num_classes), {}};
  SegmenterParams& params = result.params;
  std::mt19937_64 rng(cfg.seed);
  Eigen::MatrixXd gw(params.map_count(), kFeatureDim);
  Eigen::VectorXd gb(params.map_count());

  struct Job {
    Rect roi;
    int instance;
  };
  std::vector<Job> jobs;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    jobs.clear();
    for (std::size_t n = 0; n < instances.size(); ++n) {
      const TrainingInstance& inst = instances[n];
      for (const RoiSample& s : sample_rois(inst.box, inst.class_id, int(n),
                                            images[inst.image_index].bounds(), cfg, rng))
        if (s.matched_instance) jobs.push_back({s.roi, *s.matched_instance});
    }
    std::shuffle(jobs.begin(), jobs.end(), rng);

    EpochLoss epoch_loss{epoch, 0.0, 0.0};
    for (std::size_t start = 0; start < jobs.size(); start += std::size_t(cfg.batch_rois)) {
      const std::size_t end = std::min(jobs.size(), start + std::size_t(cfg.batch_rois));
      gw.setZero();
      gb.setZero();
      for (std::size_t b = start; b < end; ++b) {
        const TrainingInstance& inst = instances[jobs[b].instance];
        const RoiFeatures sampled =
            sample_roi_features(features[inst.image_index], jobs[b].roi, params.k);
        const SampleGrad s = accumulate_roi(sampled, inst, params, cfg, gw, gb);
        epoch_loss.loss_2d += s.loss_2d;
        epoch_loss.loss_1d += s.loss_1d;
      }
      const double step = cfg.learning_rate / double(end - start);
      params.weights -= step * gw;
      params.biases -= step * gb;
    }
    if (!jobs.empty()) {
      epoch_loss.loss_2d /= double(jobs.size());
      epoch_loss.loss_1d /= double(jobs.size());
    }
    result.trace.push_back(epoch_loss);
  }
  return result;
}

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  os.write(bytes, sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  char bytes[sizeof(T)];
  if (!is.read(bytes, sizeof(T))) throw std::runtime_error("checkpoint: truncated file");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& os, const SegmenterParams& params) {
  os.write("PMSK", 4);
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint32_t>(os, std::uint32_t(params.k));
  put_le<std::uint32_t>(os, std::uint32_t(params.num_classes));
  put_le<std::uint32_t>(os, std::uint32_t(kFeatureDim));
  for (Eigen::Index r = 0; r < params.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < params.weights.cols(); ++c) put_le<double>(os, params.weights(r, c));
  for (Eigen::Index r = 0; r < params.biases.size(); ++r) put_le<double>(os, params.biases(r));
}

SegmenterParams read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "PMSK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  if (get_le<std::uint32_t>(is) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  const auto k = get_le<std::uint32_t>(is);
  const auto classes = get_le<std::uint32_t>(is);
  const auto dim = get_le<std::uint32_t>(is);
  if (dim != kFeatureDim || k == 0 || classes == 0 || k > 1024 || classes > 65536)
    throw std::runtime_error("checkpoint: bad dimensions");
  SegmenterParams p = SegmenterParams::zeros(int(k), int(classes));
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) p.weights(r, c) = get_le<double>(is);
  for (Eigen::Index r = 0; r < p.biases.size(); ++r) p.biases(r) = get_le<double>(is);
  return p;
}

void write_checkpoint(const std::filesystem::path& path, const SegmenterParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_checkpoint(os, params);
}

SegmenterParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path.string() + "'");
  return read_checkpoint(is);
}

}  // namespace boxseg
