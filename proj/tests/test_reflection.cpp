#include <doctest.h>

#include <cmath>

#include "reflectdepth/reflection.hpp"
#include "support/test_support.hpp"

using namespace reflectdepth;
using testsupport::Rng;
using testsupport::random_image;
using testsupport::random_mask;

namespace {

BinaryMask all_valid(int h, int w) { return BinaryMask::filled(h, w, 1); }

ErrorMap make_error(int h, int w, std::vector<double> values) {
  return ErrorMap(h, w, std::move(values), all_valid(h, w));
}

}  // namespace

TEST_CASE("mahalanobis fixture {1,1,1,5}") {
  ErrorMap e = make_error(2, 2, {1.0, 1.0, 1.0, 5.0});
  MahalanobisMap m = mahalanobis_map(e);
  CHECK_FALSE(m.stats.degenerate);
  CHECK(m.stats.mean == doctest::Approx(2.0));
  CHECK(std::abs(m.z[0] - 0.577) < 1e-3);
  CHECK(std::abs(m.z[1] - 0.577) < 1e-3);
  CHECK(std::abs(m.z[2] - 0.577) < 1e-3);
  CHECK(std::abs(m.z[3] - 1.732) < 1e-3);
}

TEST_CASE("constant error map degenerates to zero z with a flag") {
  ErrorMap e = make_error(3, 3, std::vector<double>(9, 0.42));
  MahalanobisMap m = mahalanobis_map(e);
  CHECK(m.stats.degenerate);
  for (double z : m.z) CHECK(z == 0.0);
}

TEST_CASE("z is invariant under positive affine rescaling") {
  Rng rng(100);
  for (int trial = 0; trial < 20; ++trial) {
    int h = 6, w = 7;
    ImageBuffer raw = random_image(rng, h, w, 1);
    BinaryMask valid = random_mask(rng, h, w, 0.8);
    if (valid.count(1) < 2) continue;
    ErrorMap e(h, w, raw.data, valid);
    double a = rng.uniform(0.1, 5.0), c = rng.uniform(-1.0, 1.0);
    std::vector<double> scaled(raw.data.size());
    for (size_t i = 0; i < scaled.size(); ++i) scaled[i] = a * raw.data[i] + c;
    ErrorMap e2(h, w, std::move(scaled), valid);
    MahalanobisMap m1 = mahalanobis_map(e);
    MahalanobisMap m2 = mahalanobis_map(e2);
    for (size_t i = 0; i < m1.z.size(); ++i)
      CHECK(std::abs(m1.z[i] - m2.z[i]) < 1e-9);
  }
}

TEST_CASE("invalid pixels keep z at zero and are excluded from stats") {
  std::vector<std::uint8_t> valid = {1, 1, 0, 1};
  ErrorMap e(2, 2, {1.0, 3.0, 100.0, 2.0}, BinaryMask(2, 2, std::move(valid)));
  MahalanobisMap m = mahalanobis_map(e);
  CHECK(m.stats.mean == doctest::Approx(2.0));
  CHECK(m.z[2] == 0.0);
}

TEST_CASE("generic mahalanobis distance with a diagonal covariance") {
  // sqrt((1-0)^2/4 + (2-0)^2/1) = sqrt(4.25)
  double d = mahalanobis_distance({1.0, 2.0}, {0.0, 0.0}, {4.0, 0.0, 0.0, 1.0});
  CHECK(d == doctest::Approx(std::sqrt(4.25)).epsilon(1e-12));
  CHECK_THROWS_AS(
      mahalanobis_distance({1.0, 2.0}, {0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}),
      InvalidArgument);
}

TEST_CASE("reflection mask with identical errors") {
  Rng rng(101);
  ImageBuffer raw = random_image(rng, 5, 5, 1);
  ErrorMap e = make_error(5, 5, raw.data);
  SUBCASE("zero margin keeps everything: strict inequality fails on ties") {
    BinaryMask m = reflection_mask(e, e, 0.0);
    CHECK(m.count(1) == 25);
  }
  SUBCASE("a positive margin flags everything on ties") {
    BinaryMask m = reflection_mask(e, e, 0.1);
    CHECK(m.count(0) == 25);
  }
}

TEST_CASE("reflection mask matches brute-force recomputation") {
  Rng rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    int h = 8, w = 6;
    BinaryMask valid = random_mask(rng, h, w, 0.85);
    if (valid.count(1) < 2) continue;
    ErrorMap ei(h, w, random_image(rng, h, w, 1).data, valid);
    ErrorMap el(h, w, random_image(rng, h, w, 1).data, valid);
    double margin = rng.next_double() < 0.5 ? 0.0 : 0.1;
    BinaryMask m = reflection_mask(ei, el, margin);

    // Direct standardization with explicit loops.
    auto stats = [&](const ErrorMap& e) {
      double sum = 0.0;
      std::int64_t n = 0;
      for (size_t i = 0; i < e.values.size(); ++i)
        if (valid.values[i]) {
          sum += e.values[i];
          ++n;
        }
      double mu = sum / n, sq = 0.0;
      for (size_t i = 0; i < e.values.size(); ++i)
        if (valid.values[i]) sq += (e.values[i] - mu) * (e.values[i] - mu);
      return std::pair{mu, std::sqrt(sq / n)};
    };
    auto [mu_i, sd_i] = stats(ei);
    auto [mu_l, sd_l] = stats(el);
    for (size_t i = 0; i < m.values.size(); ++i) {
      if (!valid.values[i]) {
        CHECK(m.values[i] == 1);
        continue;
      }
      double zi = std::abs(ei.values[i] - mu_i) / sd_i;
      double zl = std::abs(el.values[i] - mu_l) / sd_l;
      CHECK(m.values[i] == (zl < zi + margin ? 0 : 1));
    }
  }
}

TEST_CASE("reflection mask is invariant under joint positive-affine rescale") {
  Rng rng(103);
  int h = 6, w = 6;
  ErrorMap ei = make_error(h, w, random_image(rng, h, w, 1).data);
  ErrorMap el = make_error(h, w, random_image(rng, h, w, 1).data);
  BinaryMask m1 = reflection_mask(ei, el, 0.0);
  auto rescale = [&](const ErrorMap& e, double a, double c) {
    std::vector<double> v(e.values.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a * e.values[i] + c;
    return make_error(h, w, std::move(v));
  };
  BinaryMask m2 = reflection_mask(rescale(ei, 3.0, 0.5), rescale(el, 3.0, 0.5), 0.0);
  CHECK(m1.values == m2.values);
}

TEST_CASE("masked depth loss basics") {
  int h = 4, w = 4;
  ErrorMap e = make_error(h, w, std::vector<double>(16, 0.3));
  BinaryMask ones = BinaryMask::filled(h, w, 1);
  BinaryMask zeros = BinaryMask::filled(h, w, 0);

  SUBCASE("full masks reduce to the plain mean") {
    CHECK(masked_depth_loss(e, ones, ones) == doctest::Approx(0.3));
  }
  SUBCASE("a zero reflection mask suppresses everything") {
    CHECK(masked_depth_loss(e, zeros, ones) == 0.0);
  }
  SUBCASE("checkerboard halves the loss under the fixed denominator") {
    std::vector<std::uint8_t> checker(16);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) checker[y * w + x] = (x + y) % 2;
    CHECK(masked_depth_loss(e, BinaryMask(h, w, std::move(checker)), ones) ==
          doctest::Approx(0.15));
  }
  SUBCASE("no valid pixels is an error") {
    ErrorMap dead(h, w, std::vector<double>(16, 0.3),
                  BinaryMask::filled(h, w, 0));
    CHECK_THROWS_AS(masked_depth_loss(dead, ones, ones), EmptyValidSet);
  }
}

TEST_CASE("masked depth loss never grows as the mask shrinks") {
  Rng rng(104);
  int h = 6, w = 6;
  ErrorMap e(h, w, random_image(rng, h, w, 1).data, all_valid(h, w));
  BinaryMask ones = BinaryMask::filled(h, w, 1);
  BinaryMask mask = ones;
  double prev = masked_depth_loss(e, mask, ones);
  for (int step = 0; step < 10; ++step) {
    mask.values[static_cast<size_t>(rng.next_int(h * w))] = 0;
    double cur = masked_depth_loss(e, mask, ones);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("total loss composition") {
  CHECK(total_loss(2.0, 3.0, 0.0) == doctest::Approx(5.0));
  CHECK(total_loss(0.0, 0.0, 0.0) == 0.0);
  CHECK(total_loss(0.0, 0.0, 10.0) == doctest::Approx(0.01));
  CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, 0.0), NonFiniteError);
}
