#include "doctest.h"

#include "boxseg/energy.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace boxseg;

namespace {

RoiPrediction constant_pred(const Rect& roi, double p, int class_id = 0) {
  return {roi, class_id, RealMap::Constant(kRoiGrid, kRoiGrid, p), {}};
}

// Partition of a w x h crop into vertical stripes of width `stripe`.
SuperpixelPartition stripes(const Rect& region, int stripe) {
  SuperpixelPartition part;
  part.region = region;
  part.labels.resize(region.height(), region.width());
  const int n = (region.width() + stripe - 1) / stripe;
  part.pixels.resize(n);
  for (int y = 0; y < region.height(); ++y)
    for (int x = 0; x < region.width(); ++x) {
      part.labels(y, x) = x / stripe;
      part.pixels[x / stripe].push_back({region.x0 + x, region.y0 + y});
    }
  for (int i = 0; i + 1 < n; ++i) part.adjacency.emplace_back(i, i + 1);
  return part;
}

}  // namespace

TEST_CASE("box iou") {
  CHECK(iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0);
  CHECK(iou({0, 0, 2, 2}, {5, 5, 6, 6}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 3, 2}) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("probability fusion") {
  const EnergyConfig cfg;
  const Rect gt{10, 10, 30, 30};
  const Rect region{8, 8, 32, 32};

  SUBCASE("single full-cover contributor") {
    const RoiPrediction pred = constant_pred({8, 8, 32, 32}, 0.8);
    const RealMap fused = fuse_roi_probabilities({&pred, 1}, gt, 0, region, cfg);
    CHECK(((fused - 0.8).abs() < 1e-12).all());
  }
  SUBCASE("mean of two contributors") {
    const std::vector preds{constant_pred({8, 8, 32, 32}, 0.2), constant_pred({8, 8, 32, 32}, 0.6)};
    const RealMap fused = fuse_roi_probabilities(preds, gt, 0, region, cfg);
    CHECK(((fused - 0.4).abs() < 1e-12).all());
  }
  SUBCASE("IoU filter keeps only the > 0.5 ROI") {
    // [10,10,30,30) vs [10,10,30,20): IoU 0.5 exactly, excluded.
    // [10,10,30,30) vs [10,10,30,26): IoU 0.8.
    // [10,10,30,30) vs [10,10,18,30): IoU 0.4.
    CHECK(iou(gt, {10, 10, 18, 30}) == doctest::Approx(0.4));
    CHECK(iou(gt, {10, 10, 30, 24}) == doctest::Approx(0.7));
    const std::vector preds{constant_pred({10, 10, 18, 30}, 0.9), constant_pred({10, 10, 30, 24}, 0.1)};
    const RealMap fused = fuse_roi_probabilities(preds, gt, 0, region, cfg);
    // Covered by the 0.7 ROI only.
    CHECK(fused(12 - 8, 12 - 8) == doctest::Approx(0.1));
    // Outside every contributor: uncovered prior.
    CHECK(fused(0, 0) == doctest::Approx(cfg.uncovered_prior));
    CHECK(fused(27 - 8, 12 - 8) == doctest::Approx(cfg.uncovered_prior));
  }
  SUBCASE("class filter and no contributors") {
    const RoiPrediction pred = constant_pred(gt, 0.9, 1);
    const RealMap fused = fuse_roi_probabilities({&pred, 1}, gt, 0, region, cfg);
    CHECK(((fused - cfg.uncovered_prior).abs() < 1e-15).all());
  }
  SUBCASE("single contributor equals its upsampled map") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    RoiPrediction pred{gt, 0, RealMap(kRoiGrid, kRoiGrid), {}};
    for (Eigen::Index i = 0; i < pred.fg28.size(); ++i) pred.fg28.data()[i] = u(rng);
    const RealMap fused = fuse_roi_probabilities({&pred, 1}, gt, 0, gt, cfg);
    const RealMap up = resample_bilinear(pred.fg28, full_rect(pred.fg28), 20, 20);
    CHECK(((fused - up).abs() < 1e-15).all());
    CHECK((fused >= 0).all());
    CHECK((fused <= 1).all());
  }
}

TEST_CASE("unary terms") {
  const EnergyConfig cfg;
  const Rect region{0, 0, 8, 2};
  const SuperpixelPartition part = stripes(region, 2);  // 4 ids of 4 pixels each

  SUBCASE("outside the box is hard background") {
    const auto u = unary_terms(part, RealMap::Constant(2, 8, 0.5), {0, 0, 4, 2}, cfg);
    CHECK(!u[0].hard_bg);
    CHECK(!u[1].hard_bg);
    CHECK(u[2].hard_bg);
    CHECK(u[3].hard_bg);
  }
  SUBCASE("symmetric probability") {
    const auto u = unary_terms(part, RealMap::Constant(2, 8, 0.5), region, cfg);
    CHECK(u[0].cost_bg == doctest::Approx(4 * std::log(2.0)).epsilon(1e-12));
    CHECK(u[0].cost_fg == doctest::Approx(4 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("straddling superpixel sums over in-box pixels only") {
    // Box covers column 0..2, so id 1 (columns 2,3) has 2 in-box pixels.
    const auto u = unary_terms(part, RealMap::Constant(2, 8, 0.5), {0, 0, 3, 2}, cfg);
    CHECK(!u[1].hard_bg);
    CHECK(u[1].cost_fg == doctest::Approx(2 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("clamped certainty") {
    SuperpixelPartition one;
    one.region = {0, 0, 1, 1};
    one.labels = Raster<int>::Zero(1, 1);
    one.pixels = {{{0, 0}}};
    const auto u = unary_terms(one, RealMap::Constant(1, 1, 1.0), one.region, cfg);
    // -log(1 - 1e-6) and -log(1e-6); 1 - 1e-6 is not exact in binary, hence 1e-9.
    CHECK(u[0].cost_fg == doctest::Approx(1.0000005000003334e-06).epsilon(1e-9));
    CHECK(u[0].cost_bg == doctest::Approx(13.815510557964274).epsilon(1e-9));
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS(unary_terms(part, RealMap::Constant(3, 8, 0.5), region, cfg));
  }
}

TEST_CASE("pairwise term") {
  EnergyConfig cfg;
  Histogram a, b;
  a.color(3) = 1.0;
  a.texture(1) = 0.5;
  CHECK(pairwise_term(a, a, cfg) == 1.0);
  b.color(0) = 5.0;  // squared color distance 25 against the zero histogram
  CHECK(pairwise_term(b, Histogram{}, cfg) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  cfg.lambda = 0.0;
  CHECK(pairwise_term(a, b, cfg) == 0.0);
  cfg.lambda = 2.5;
  const double w = pairwise_term(a, b, cfg);
  CHECK(w > 0);
  CHECK(w <= 2.5);
  CHECK(w == pairwise_term(b, a, cfg));
}

TEST_CASE("energy assembly and evaluation") {
  const EnergyConfig cfg;
  const Rect region{0, 0, 12, 3};
  ImageRgb img(12, 3, ImageRgb::Pixel{10, 10, 10});
  for (int x = 6; x < 12; ++x)
    for (int y = 0; y < 3; ++y) img.set(x, y, {200, 30, 90});

  SUBCASE("one superpixel inside the box") {
    const SuperpixelPartition part = stripes(region, 12);
    const auto e = build_energy(img, part, RealMap::Constant(3, 12, 0.7), region, cfg);
    CHECK(e.n == 1);
    CHECK(e.pairwise.empty());
  }
  SUBCASE("all outside the box") {
    const SuperpixelPartition part = stripes({0, 0, 6, 3}, 2);
    const auto e = build_energy(img, part, RealMap::Constant(3, 6, 0.7), {7, 0, 12, 3}, cfg);
    for (const auto& u : e.unary) CHECK(u.hard_bg);
    CHECK(evaluate_energy(e, Labeling(e.n, 0)) == 0.0);
    CHECK(evaluate_energy(e, Labeling(e.n, 1)) == kInfiniteEnergy);
  }
  SUBCASE("random labelings match term-by-term summation") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    const SuperpixelPartition part = stripes(region, 2);  // 6 ids
    RealMap prob(3, 12);
    for (Eigen::Index i = 0; i < prob.size(); ++i) prob.data()[i] = u(rng);
    const Rect box{1, 0, 11, 3};
    const auto e = build_energy(img, part, prob, box, cfg);
    REQUIRE(e.n == 6);
    REQUIRE(e.pairwise.size() == 5);
    const auto hists = build_histograms(img, part);
    for (int trial = 0; trial < 64; ++trial) {
      Labeling lab(6);
      for (int i = 0; i < 6; ++i) lab[i] = (trial >> i) & 1;
      double expected = 0.0;
      for (int id = 0; id < 6; ++id)
        for (const PixelCoord& p : part.pixels[id]) {
          if (!box.contains(p.x, p.y)) continue;
          const double q = prob(p.y, p.x);
          expected += lab[id] ? -std::log(q) : -std::log(1 - q);
        }
      for (const auto& [i, j] : part.adjacency)
        if (lab[i] != lab[j]) expected += pairwise_term(hists[i], hists[j], cfg);
      CHECK(evaluate_energy(e, lab) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("energy is linear in lambda") {
    const SuperpixelPartition part = stripes(region, 3);
    const RealMap prob = RealMap::Constant(3, 12, 0.3);
    EnergyConfig c1 = cfg, c2 = cfg;
    c1.lambda = 1.0;
    c2.lambda = 3.0;
    const auto e0 = build_energy(img, part, prob, region, [&] { auto c = cfg; c.lambda = 0; return c; }());
    const auto e1 = build_energy(img, part, prob, region, c1);
    const auto e2 = build_energy(img, part, prob, region, c2);
    const Labeling lab{1, 0, 1, 0};
    const double base = evaluate_energy(e0, lab);
    CHECK(evaluate_energy(e2, lab) - base ==
          doctest::Approx(3 * (evaluate_energy(e1, lab) - base)).epsilon(1e-12));
  }
}

TEST_CASE("random energies are submodular and nonnegative") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const InstanceEnergy e = oracle::random_energy(rng, 8, 2.0);
    for (const auto& p : e.pairwise) {
      CHECK(p.w >= 0);
      CHECK(p.w <= 2.0);
    }
    for (const auto& u : e.unary) {
      CHECK(u.cost_bg >= 0);
      CHECK(u.cost_fg >= 0);
    }
  }
}
