// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "commands.hpp"
#include "oracles.hpp"

#include "boxseg/segmenter.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace boxseg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("[%s] %s %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void ac1_max_flow() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> nodes(1, 12);
  std::uniform_real_distribution<double> density(0.1, 0.8);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const FlowNetwork g = oracle::random_network(rng, nodes(rng), 20, density(rng));
    const CutResult fast = solve_max_flow(g);
    const CutResult slow = brute_force_min_cut(g);
    if (fast.flow != slow.flow || cut_capacity(g, fast.side) != slow.flow) ++mismatches;
  }
  const double secs = seconds_since(start);
  report("AC1", mismatches == 0 && secs < 10.0,
         fmt("max-flow vs brute-force min cut: 200 networks, %d mismatches, %.2f s (< 10 s)",
             mismatches, secs));
}

void ac2_energy_reduction() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> size(1, 18);
  std::uniform_real_distribution<double> lambda(0.0, 5.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const InstanceEnergy e = oracle::random_energy(rng, size(rng), lambda(rng));
    const double cut = evaluate_energy(e, minimize_energy(e));
    worst = std::max(worst, std::abs(cut - oracle::exhaustive_min_energy(e)));
  }
  report("AC2", worst <= 1e-9,
         fmt("min-cut labelling vs exhaustive minimum: 100 energies, max |diff| %.3g (<= 1e-9)", worst));
}

// AC3 and AC5 share one T=3 run on the bundled corpus.
void ac3_ac5_pipeline() {
  const fs::path manifest = fs::path(BOXSEG_SYNTH50) / "manifest.json";
  const Dataset data = load_dataset(manifest);
  PipelineConfig cfg;
  cfg.segmenter.seed = 7;
  cfg.jobs = 1;

  long outside = 0;
  int masks_checked = 0;
  const auto start = Clock::now();
  const auto results = run_algorithm1(data, cfg, [&](const IterationResult& r) {
    for (std::size_t n = 0; n < r.masks.size(); ++n) {
      const BinaryMask& m = r.masks[n].mask;
      const Rect& b = data.instances[n].box;
      outside += long(m.count()) - long(m.block(b.y0, b.x0, b.height(), b.width()).count());
      ++masks_checked;
    }
  });
  const double secs = seconds_since(start);

  report("AC3", outside == 0 && results.size() == 4,
         fmt("box constraint: %d masks over %zu iterations, %ld foreground pixels outside boxes",
             masks_checked, results.size(), outside));

  std::string trend;
  double worst_drop = 0.0;
  for (std::size_t t = 0; t < results.size(); ++t) {
    trend += fmt("%s%.4f", t ? " -> " : "", results[t].eval.mean_iou);
    if (t > 0) worst_drop = std::max(worst_drop, results[t - 1].eval.mean_iou - results[t].eval.mean_iou);
  }
  const double gain = results.back().eval.mean_iou - results.front().eval.mean_iou;
  report("AC5", results.size() == 4 && gain >= 0.10 && worst_drop <= 0.02 && secs < 300.0,
         fmt("mean IoU %s: gain %.4f (>= 0.10), worst drop %.4f (<= 0.02), %.1f s (< 300 s)",
             trend.c_str(), gain, worst_drop, secs));
}

void ac4_gradients() {
  std::mt19937_64 rng(1004);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> side(6, 14), byte(0, 255);
  std::bernoulli_distribution coin(0.5);
  constexpr double eps = 1e-5;
  double worst = 0.0;
  int param_checks = 0;

  for (int t = 0; t < 20; ++t) {
    const int w = side(rng), h = side(rng);
    ImageRgb img(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.set(x, y, {std::uint8_t(byte(rng)), std::uint8_t(byte(rng)), std::uint8_t(byte(rng))});
    std::uniform_int_distribution<int> px(0, w - 2), py(0, h - 2);
    auto random_rect = [&] {
      const int x0 = px(rng), y0 = py(rng);
      return Rect{x0, y0, std::uniform_int_distribution<int>(x0 + 1, w)(rng),
                  std::uniform_int_distribution<int>(y0 + 1, h)(rng)};
    };
    const Rect roi = random_rect(), gt = random_rect();

    // Gradient with respect to the 784 logits.
    RealMap z(kRoiGrid, kRoiGrid);
    BinaryMask target(kRoiGrid, kRoiGrid);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      z.data()[i] = 2.0 * normal(rng);
      target.data()[i] = coin(rng);
    }
    if (oracle::min_argmax_margin(z) <= 10 * eps) continue;  // tie: finite differences undefined
    auto pred_of = [&] {
      return RoiPrediction{roi, 0, z.unaryExpr([](double v) { return sigmoid(v); }), z};
    };
    const LossAndGrad l2 = loss_2d(pred_of(), target);
    const LossAndGrad l1 = loss_1d(pred_of(), gt);
    Eigen::Map<Eigen::VectorXd> flat(z.data(), z.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      const double n2 = oracle::central_difference([&] { return loss_2d(pred_of(), target).loss; }, flat, i, eps);
      const double n1 = oracle::central_difference([&] { return loss_1d(pred_of(), gt).loss; }, flat, i, eps);
      worst = std::max({worst, oracle::relative_error(l2.grad.data()[i], n2),
                        oracle::relative_error(l1.grad.data()[i], n1)});
    }

    // Gradient with respect to the segmenter parameters, through assembly.
    SegmenterConfig cfg;
    cfg.k = std::vector{1, 2, 7}[t % 3];
    SegmenterParams p = SegmenterParams::zeros(cfg.k, 1);
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < p.biases.size(); ++i) p.biases(i) = normal(rng);
    const FeatureMap f = pixel_features(img);
    TrainingInstance inst{0, 0, gt, BinaryMask::Zero(h, w)};
    inst.mask.block(gt.y0, gt.x0, gt.height(), gt.width()).setOnes();
    const RoiPrediction pr = predict_roi(sample_roi_features(f, roi, cfg.k), p, 0);
    // Small ROIs sample the same pixel repeatedly, which ties the max-projections.
    if (oracle::min_argmax_margin(pr.logits28) <= 10 * eps) cfg.loss_1d_weight = 0.0;
    const RoiLoss rl = roi_loss(f, roi, inst, p, cfg);
    auto total = [&] {
      const RoiLoss l = roi_loss(f, roi, inst, p, cfg);
      return l.loss_2d + cfg.loss_1d_weight * l.loss_1d;
    };
    Eigen::Map<Eigen::VectorXd> wv(p.weights.data(), p.weights.size());
    const Eigen::Map<const Eigen::VectorXd> gw(rl.grad_weights.data(), rl.grad_weights.size());
    for (Eigen::Index i = 0; i < wv.size(); ++i)
      worst = std::max(worst, oracle::relative_error(gw(i), oracle::central_difference(total, wv, i, eps)));
    for (Eigen::Index i = 0; i < p.biases.size(); ++i)
      worst = std::max(worst, oracle::relative_error(rl.grad_biases(i),
                                                     oracle::central_difference(total, p.biases, i, eps)));
    ++param_checks;
  }
  report("AC4", worst < 1e-4 && param_checks == 20,
         fmt("loss gradients vs central differences (eps 1e-5): %d instances, max rel err %.3g (< 1e-4)",
             param_checks, worst));
}

void ac6_assembly() {
  std::mt19937_64 rng(1006);
  std::uniform_real_distribution<double> val(-5, 5);
  std::uniform_int_distribution<int> dim(1, 24), classes(1, 3);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int k = std::vector{1, 2, 7}[t % 3];
    const int w = dim(rng), h = dim(rng), c = classes(rng);
    std::vector<RealMap> maps;
    for (int m = 0; m < k * k * c; ++m) {
      RealMap map(h, w);
      for (Eigen::Index i = 0; i < map.size(); ++i) map.data()[i] = val(rng);
      maps.push_back(map);
    }
    const int x0 = std::uniform_int_distribution<int>(0, w - 1)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, h - 1)(rng);
    const Rect roi{x0, y0, std::uniform_int_distribution<int>(x0 + 1, w)(rng),
                   std::uniform_int_distribution<int>(y0 + 1, h)(rng)};
    const int cls = std::uniform_int_distribution<int>(0, c - 1)(rng);
    const RoiPrediction p = assemble_roi(maps, roi, cls, k);
    for (int v = 0; v < kRoiGrid; ++v)
      for (int u = 0; u < kRoiGrid; ++u)
        worst = std::max(worst, std::abs(p.logits28(v, u) - oracle::assembled_logit(maps, roi, cls, k, u, v)));
  }
  report("AC6", worst <= 1e-12,
         fmt("assembly vs index-arithmetic oracle: 50 map sets x 784 positions, max |diff| %.3g", worst));
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const std::string rel = fs::relative(e.path(), root).generic_string();
    if (e.is_directory()) {
      files[rel + "/"] = "";
      continue;
    }
    std::ifstream is(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    files[rel] = ss.str();
  }
  return files;
}

void ac7_determinism() {
  const fs::path tmp = fs::temp_directory_path() / "boxseg_acceptance_ac7";
  fs::remove_all(tmp);
  cli::GlobalOptions g;
  g.seed = 7;
  cli::cmd_synth(10, tmp / "data", g);
  std::ostringstream log;
  cli::cmd_run(tmp / "data/manifest.json", tmp / "run_a", g, log);
  cli::cmd_run(tmp / "data/manifest.json", tmp / "run_b", g, log);
  const auto a = snapshot(tmp / "run_a"), b = snapshot(tmp / "run_b");
  std::size_t bytes = 0;
  for (const auto& [k, v] : a) bytes += v.size();
  report("AC7", !a.empty() && a == b,
         fmt("two identical runs: %zu entries, %zu bytes, trees %s", a.size(), bytes,
             a == b ? "byte-identical" : "differ"));
  fs::remove_all(tmp);
}

void ac8_histograms() {
  std::mt19937_64 rng(1008);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<double> lambda(0.0, 10.0);
  double worst_sum = 0.0, worst_self = 0.0;
  int superpixels = 0;
  while (superpixels < 100) {
    ImageRgb img(24, 24);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x)
        img.set(x, y, {std::uint8_t(byte(rng)), std::uint8_t(byte(rng)), std::uint8_t(byte(rng))});
    const SuperpixelPartition part = felzenszwalb_segment(img, img.bounds(), 200.0, 4);
    const auto hists = build_histograms(img, part);
    for (const Histogram& h : hists) {
      if (superpixels == 100) break;
      ++superpixels;
      for (int c = 0; c < 3; ++c)
        worst_sum = std::max(worst_sum, std::abs(h.color.segment(c * kColorBins, kColorBins).sum() - 1.0));
      for (int o = 0; o < 2; ++o)
        worst_sum = std::max(worst_sum, std::abs(h.texture.segment(o * kTextureBins, kTextureBins).sum() - 1.0));
      EnergyConfig cfg;
      cfg.lambda = lambda(rng);
      worst_self = std::max(worst_self, std::abs(pairwise_term(h, h, cfg) - cfg.lambda));
    }
  }
  report("AC8", worst_sum <= 1e-9 && worst_self <= 1e-12,
         fmt("histograms of %d superpixels: max |L1 - 1| %.3g (<= 1e-9), max |V(h,h) - lambda| %.3g (<= 1e-12)",
             superpixels, worst_sum, worst_self));
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> steps[] = {
      {"AC1", ac1_max_flow},   {"AC2", ac2_energy_reduction}, {"AC3/AC5", ac3_ac5_pipeline},
      {"AC4", ac4_gradients},  {"AC6", ac6_assembly},         {"AC7", ac7_determinism},
      {"AC8", ac8_histograms},
  };
  for (const auto& [id, fn] : steps) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
