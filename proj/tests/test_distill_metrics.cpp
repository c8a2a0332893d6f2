#include <doctest.h>

#include <cmath>

#include "reflectdepth/distill.hpp"
#include "reflectdepth/metrics.hpp"
#include "support/test_support.hpp"

using namespace reflectdepth;
using testsupport::Rng;
using testsupport::random_depth;
using testsupport::random_mask;

TEST_CASE("fuse selects per pixel") {
  int h = 4, w = 6;
  DepthMap org = DepthMap::filled(h, w, 2.0);
  DepthMap refl = DepthMap::filled(h, w, 5.0);

  SUBCASE("all-ones mask keeps the conventional depth") {
    DepthMap out = fuse_pseudo_depth(org, refl, BinaryMask::filled(h, w, 1));
    for (double v : out.values) CHECK(v == 2.0);
  }
  SUBCASE("all-zeros mask keeps the reflection-aware depth") {
    DepthMap out = fuse_pseudo_depth(org, refl, BinaryMask::filled(h, w, 0));
    for (double v : out.values) CHECK(v == 5.0);
  }
  SUBCASE("left-half mask splits the output") {
    std::vector<std::uint8_t> half(static_cast<size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x) half[static_cast<size_t>(y) * w + x] = 1;
    DepthMap out = fuse_pseudo_depth(org, refl, BinaryMask(h, w, half));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        CHECK(out.at(y, x) == (x < w / 2 ? 2.0 : 5.0));
  }
}

TEST_CASE("fused output is pointwise one of the inputs") {
  Rng rng(200);
  for (int trial = 0; trial < 20; ++trial) {
    DepthMap a = random_depth(rng, 5, 5, 0.2, 9.0);
    DepthMap b = random_depth(rng, 5, 5, 0.2, 9.0);
    BinaryMask m = random_mask(rng, 5, 5);
    DepthMap out = fuse_pseudo_depth(a, b, m);
    for (size_t i = 0; i < out.values.size(); ++i)
      CHECK((out.values[i] == a.values[i] || out.values[i] == b.values[i]));
  }
}

TEST_CASE("fuse validates depth range and shape") {
  DepthMap ok = DepthMap::filled(2, 2, 1.0);
  DepthMap bad = DepthMap::filled(2, 2, 11.0);
  BinaryMask m = BinaryMask::filled(2, 2, 1);
  CHECK_THROWS_AS(fuse_pseudo_depth(ok, bad, m), OutOfRange);
  DepthMap other = DepthMap::filled(2, 3, 1.0);
  CHECK_THROWS_AS(fuse_pseudo_depth(ok, other, m), DimensionMismatch);
}

TEST_CASE("distill loss basics") {
  DepthMap d = DepthMap::filled(3, 3, 2.5);
  CHECK(distill_loss(d, d) == 0.0);

  DepthMap twice = DepthMap::filled(3, 3, 5.0);
  CHECK(distill_loss(twice, d) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  DepthMap zero = DepthMap::filled(3, 3, 0.0);
  CHECK_THROWS_AS(distill_loss(zero, d), NonPositiveValue);
}

TEST_CASE("distill loss matches the double-loop oracle") {
  Rng rng(201);
  for (int trial = 0; trial < 30; ++trial) {
    DepthMap a = random_depth(rng, 6, 7);
    DepthMap b = random_depth(rng, 6, 7);
    double sum = 0.0;
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 7; ++x)
        sum += std::abs(std::log(a.at(y, x)) - std::log(b.at(y, x)));
    CHECK(std::abs(distill_loss(a, b) - sum / 42.0) < 1e-9);
  }
}

TEST_CASE("distill loss ignores joint rescaling") {
  Rng rng(202);
  DepthMap a = random_depth(rng, 5, 5, 0.5, 2.0);
  DepthMap b = random_depth(rng, 5, 5, 0.5, 2.0);
  DepthMap a2 = a, b2 = b;
  for (auto& v : a2.values) v *= 3.0;
  for (auto& v : b2.values) v *= 3.0;
  CHECK(distill_loss(a, b) == doctest::Approx(distill_loss(a2, b2)).epsilon(1e-12));
}

// ---------------------------------------------------------------------------

namespace {

struct NaiveMetrics {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0, a1 = 0, a2 = 0, a3 = 0;
};

// Scalar-loop re-derivation with clamping and range filtering spelled out.
NaiveMetrics naive_metrics(const DepthMap& pred, const DepthMap& gt,
                           double lo, double hi) {
  NaiveMetrics m;
  int n = 0;
  for (size_t i = 0; i < gt.values.size(); ++i) {
    double g = gt.values[i];
    if (g < lo || g > hi) continue;
    double p = std::clamp(pred.values[i], lo, hi);
    ++n;
    m.abs_rel += std::abs(p - g) / g;
    m.sq_rel += (p - g) * (p - g) / g;
    m.rmse += (p - g) * (p - g);
    m.rmse_log += std::pow(std::log(p) - std::log(g), 2.0);
    double r = std::max(p / g, g / p);
    m.a1 += r < 1.25;
    m.a2 += r < 1.5625;
    m.a3 += r < 1.953125;
  }
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(m.rmse / n);
  m.rmse_log = std::sqrt(m.rmse_log / n);
  m.a1 /= n;
  m.a2 /= n;
  m.a3 /= n;
  return m;
}

}  // namespace

TEST_CASE("perfect prediction scores zeros and ones") {
  Rng rng(203);
  DepthMap gt = random_depth(rng, 8, 8);
  DepthMetrics m = depth_metrics(gt, gt);
  CHECK(m.abs_rel == 0.0);
  CHECK(m.sq_rel == 0.0);
  CHECK(m.rmse == 0.0);
  CHECK(m.rmse_log == 0.0);
  CHECK(m.a1 == 1.0);
  CHECK(m.a2 == 1.0);
  CHECK(m.a3 == 1.0);
  CHECK(m.valid_pixels == 64);
}

TEST_CASE("hand fixture {1,2} vs {2,2}") {
  DepthMap pred(1, 2, {1.0, 2.0});
  DepthMap gt(1, 2, {2.0, 2.0});
  DepthMetrics m = depth_metrics(pred, gt);
  CHECK(m.abs_rel == doctest::Approx(0.25));
  CHECK(m.sq_rel == doctest::Approx(0.25));
  CHECK(m.rmse == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(m.a1 == doctest::Approx(0.5));
}

TEST_CASE("metrics match the scalar-loop oracle on random maps") {
  Rng rng(204);
  for (int trial = 0; trial < 50; ++trial) {
    DepthMap pred = random_depth(rng, 8, 8, 0.05, 12.0);
    DepthMap gt = random_depth(rng, 8, 8, 0.05, 12.0);
    DepthMetrics m = depth_metrics(pred, gt, 0.1, 10.0);
    NaiveMetrics o = naive_metrics(pred, gt, 0.1, 10.0);
    CHECK(std::abs(m.abs_rel - o.abs_rel) < 1e-9);
    CHECK(std::abs(m.sq_rel - o.sq_rel) < 1e-9);
    CHECK(std::abs(m.rmse - o.rmse) < 1e-9);
    CHECK(std::abs(m.rmse_log - o.rmse_log) < 1e-9);
    CHECK(std::abs(m.a1 - o.a1) < 1e-9);
    CHECK(std::abs(m.a2 - o.a2) < 1e-9);
    CHECK(std::abs(m.a3 - o.a3) < 1e-9);
  }
}

TEST_CASE("gt outside the depth range is excluded") {
  DepthMap pred(1, 3, {1.0, 1.0, 1.0});
  DepthMap gt(1, 3, {0.05, 1.0, 42.0});
  DepthMetrics m = depth_metrics(pred, gt);
  CHECK(m.valid_pixels == 1);
  CHECK(m.abs_rel == 0.0);

  DepthMap gt_bad(1, 3, {0.01, 0.02, 99.0});
  CHECK_THROWS_AS(depth_metrics(pred, gt_bad), NoValidPixels);
}

TEST_CASE("abs_rel and delta are invariant under joint rescale") {
  Rng rng(205);
  DepthMap pred = random_depth(rng, 6, 6, 0.5, 2.0);
  DepthMap gt = random_depth(rng, 6, 6, 0.5, 2.0);
  DepthMap pred2 = pred, gt2 = gt;
  for (auto& v : pred2.values) v *= 3.0;
  for (auto& v : gt2.values) v *= 3.0;
  DepthMetrics a = depth_metrics(pred, gt, 0.01, 100.0);
  DepthMetrics b = depth_metrics(pred2, gt2, 0.01, 100.0);
  CHECK(a.abs_rel == doctest::Approx(b.abs_rel).epsilon(1e-12));
  CHECK(a.a1 == doctest::Approx(b.a1));
  CHECK(b.rmse == doctest::Approx(3.0 * a.rmse).epsilon(1e-12));
}

TEST_CASE("mask iou") {
  BinaryMask a = BinaryMask::filled(4, 4, 1);
  BinaryMask b = BinaryMask::filled(4, 4, 1);
  CHECK(mask_iou(a, b, 1) == 1.0);

  BinaryMask empty = BinaryMask::filled(4, 4, 0);
  CHECK(mask_iou(empty, empty, 1) == 1.0);  // both empty
  CHECK(mask_iou(a, empty, 1) == 0.0);      // disjoint

  // pred covers half of gt and nothing else
  std::vector<std::uint8_t> halfv(16, 0), fullv(16, 1);
  for (int i = 0; i < 8; ++i) halfv[i] = 1;
  BinaryMask half(4, 4, halfv);
  CHECK(mask_iou(half, BinaryMask(4, 4, fullv), 1) == doctest::Approx(0.5));

  CHECK(mask_iou(empty, a, 0) == 0.0);  // positive class 0 view
}
