#include <doctest.h>

#include <cmath>

#include "reflectdepth/geometry.hpp"
#include "reflectdepth/photometric.hpp"
#include "reflectdepth/synthetic.hpp"
#include "support/test_support.hpp"

using namespace reflectdepth;
using testsupport::Rng;
using testsupport::random_image;
using testsupport::random_mask;

namespace {

// Closed-form SSIM of two constant patches: variances and covariance vanish.
double constant_ssim(double a, double b) {
  return (2.0 * a * b + kSsimC1) / (a * a + b * b + kSsimC1);
}

BinaryMask all_valid(int h, int w) { return BinaryMask::filled(h, w, 1); }

}  // namespace

TEST_CASE("ssim of an image with itself is 1") {
  Rng rng(21);
  ImageBuffer x = random_image(rng, 12, 10, 3);
  for (double v : ssim_map(x, x)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of constant patches matches the closed form") {
  ImageBuffer a = ImageBuffer::filled(8, 9, 3, 0.3);
  ImageBuffer b = ImageBuffer::filled(8, 9, 3, 0.7);
  double expected = constant_ssim(0.3, 0.7);
  CHECK(expected == doctest::Approx(0.7241).epsilon(2e-4));
  for (double v : ssim_map(a, b))
    CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("distinct non-constant patches score below 1") {
  Rng rng(3);
  ImageBuffer x = random_image(rng, 10, 10, 1, 0.1, 0.9);
  ImageBuffer inv = x;
  for (auto& v : inv.data) v = 1.0 - v;
  for (double v : ssim_map(x, inv)) CHECK(v < 1.0);
}

TEST_CASE("photometric error is zero for identical inputs") {
  Rng rng(5);
  ImageBuffer x = random_image(rng, 9, 9, 3);
  ErrorMap e = photometric_error(x, x, all_valid(9, 9), 0.85);
  for (double v : e.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("alpha 0 reduces to channel-mean L1") {
  Rng rng(6);
  ImageBuffer a = random_image(rng, 7, 8, 3);
  ImageBuffer b = random_image(rng, 7, 8, 3);
  ErrorMap e = photometric_error(a, b, all_valid(7, 8), 0.0);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 8; ++x) {
      double l1 = 0.0;
      for (int c = 0; c < 3; ++c) l1 += std::abs(a.at(y, x, c) - b.at(y, x, c));
      CHECK(e.at(y, x) == doctest::Approx(l1 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("alpha 0.85 blend on constant patches") {
  ImageBuffer a = ImageBuffer::filled(6, 6, 3, 0.3);
  ImageBuffer b = ImageBuffer::filled(6, 6, 3, 0.7);
  ErrorMap e = photometric_error(a, b, all_valid(6, 6), 0.85);
  double expected = 0.85 * (1.0 - constant_ssim(0.3, 0.7)) / 2.0 + 0.15 * 0.4;
  CHECK(expected == doctest::Approx(0.1773).epsilon(2e-3));
  for (double v : e.values) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("photometric error is symmetric and bounded on [0,1] images") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    ImageBuffer a = random_image(rng, 8, 8, 3, 0.0, 1.0);
    ImageBuffer b = random_image(rng, 8, 8, 3, 0.0, 1.0);
    double alpha = rng.next_double();
    ErrorMap ab = photometric_error(a, b, all_valid(8, 8), alpha);
    ErrorMap ba = photometric_error(b, a, all_valid(8, 8), alpha);
    for (size_t i = 0; i < ab.values.size(); ++i) {
      CHECK(std::abs(ab.values[i] - ba.values[i]) < 1e-9);
      CHECK(ab.values[i] >= 0.0);
      CHECK(ab.values[i] <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("photometric error rejects bad alpha and shapes") {
  Rng rng(2);
  ImageBuffer a = random_image(rng, 4, 4, 1);
  CHECK_THROWS_AS(photometric_error(a, a, all_valid(4, 4), 1.5), InvalidArgument);
  ImageBuffer b = random_image(rng, 4, 5, 1);
  CHECK_THROWS_AS(photometric_error(a, b, all_valid(4, 4), 0.5),
                  DimensionMismatch);
}

TEST_CASE("min_reprojection basics") {
  CHECK_THROWS_AS(min_reprojection({}), EmptyInput);

  int h = 4, w = 5;
  ErrorMap a(h, w, std::vector<double>(20, 0.2), all_valid(h, w));
  SUBCASE("single map returns itself") {
    ErrorMap m = min_reprojection({a});
    for (double v : m.values) CHECK(v == 0.2);
  }
  SUBCASE("pointwise minimum") {
    ErrorMap b(h, w, std::vector<double>(20, 0.1), all_valid(h, w));
    ErrorMap m = min_reprojection({a, b});
    for (double v : m.values) CHECK(v == 0.1);
  }
  SUBCASE("validity union picks the valid side") {
    std::vector<std::uint8_t> left(20, 0), right(20, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        (x < 2 ? left : right)[static_cast<size_t>(y) * w + x] = 1;
    ErrorMap la(h, w, std::vector<double>(20, 0.3), BinaryMask(h, w, left));
    ErrorMap rb(h, w, std::vector<double>(20, 0.4), BinaryMask(h, w, right));
    ErrorMap m = min_reprojection({la, rb});
    CHECK(m.valid.count(1) == 20);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        CHECK(m.at(y, x) == (x < 2 ? 0.3 : 0.4));
  }
  SUBCASE("fused minimum never exceeds inputs on jointly valid pixels") {
    Rng rng(14);
    ImageBuffer va = random_image(rng, h, w, 1);
    ImageBuffer vb = random_image(rng, h, w, 1);
    ErrorMap ea(h, w, va.data, random_mask(rng, h, w, 0.8));
    ErrorMap eb(h, w, vb.data, random_mask(rng, h, w, 0.8));
    ErrorMap m = min_reprojection({ea, eb});
    for (size_t i = 0; i < m.values.size(); ++i) {
      if (ea.valid.values[i] && m.valid.values[i])
        CHECK(m.values[i] <= ea.values[i] + 1e-15);
      if (eb.valid.values[i] && m.valid.values[i])
        CHECK(m.values[i] <= eb.values[i] + 1e-15);
    }
  }
}

TEST_CASE("auto mask is empty for a static camera") {
  Rng rng(17);
  ImageBuffer ref = random_image(rng, 8, 8, 3);
  ImageBuffer src = random_image(rng, 8, 8, 3);
  // warped == unwarped source: strict inequality fails everywhere
  BinaryMask m = auto_mask(ref, src, src, all_valid(8, 8), 0.85);
  CHECK(m.count(1) == 0);
}

TEST_CASE("auto mask fires where warping wins") {
  Rng rng(18);
  ImageBuffer ref = random_image(rng, 8, 8, 3, 0.2, 0.9);
  ImageBuffer src = ref;
  for (auto& v : src.data) v = std::min(1.0, v + 0.05);
  BinaryMask m = auto_mask(ref, ref, src, all_valid(8, 8), 0.85);
  SUBCASE("perfect warp beats a differing source") {
    BinaryMask good = auto_mask(ref, src, ref, all_valid(8, 8), 0.85);
    CHECK(good.count(1) == 64);
  }
  SUBCASE("warp worse than source is masked out") { CHECK(m.count(1) == 0); }
}

TEST_CASE("auto mask agrees with direct error-map comparison on a real scene") {
  SceneSpec spec;
  spec.seed = 40;
  spec.specular_strength = 0.0;
  int h = 48, w = 64;
  Camera ref_cam = scene_camera(spec, 0, 3, h, w);
  Camera src_cam = scene_camera(spec, 1, 3, h, w);
  RenderedView ref = render_view(spec, ref_cam, h, w);
  RenderedView src = render_view(spec, src_cam, h, w);

  WarpResult warped = warp(src.image, ref.gt_depth, ref_cam.intrinsics,
                           relative_transform(ref_cam, src_cam));
  BinaryMask mask =
      auto_mask(ref.image, src.image, warped.image, warped.valid, 0.85);

  // Brute force: recompute both error maps and compare per pixel.
  ErrorMap warped_err =
      photometric_error(ref.image, warped.image, warped.valid, 0.85);
  ErrorMap identity_err =
      photometric_error(ref.image, src.image, all_valid(h, w), 0.85);
  std::int64_t agree = 0, total = 0;
  for (size_t i = 0; i < mask.values.size(); ++i) {
    std::uint8_t expected =
        (warped_err.valid.values[i] &&
         warped_err.values[i] < identity_err.values[i])
            ? 1
            : 0;
    agree += mask.values[i] == expected;
    ++total;
  }
  CHECK(agree >= (total * 95) / 100);
  // On a translating textured scene warping should win almost everywhere.
  CHECK(mask.count(1) > total / 2);
}

TEST_CASE("smoothness of constant disparity is zero") {
  ImageBuffer img = ImageBuffer::filled(5, 5, 3, 0.5);
  std::vector<double> disp(25, 2.0);
  CHECK(smoothness(disp, 5, 5, img) == doctest::Approx(0.0));
}

TEST_CASE("smoothness of a ramp on a constant image is the mean gradient") {
  // 3x3 disparity ramp along x: normalized steps are 1/mean everywhere.
  ImageBuffer img = ImageBuffer::filled(3, 3, 1, 0.4);
  std::vector<double> disp = {1, 2, 3, 1, 2, 3, 1, 2, 3};
  double mean = 2.0 + 1e-7;
  CHECK(smoothness(disp, 3, 3, img) == doctest::Approx(1.0 / mean).epsilon(1e-12));
}

TEST_CASE("an image edge attenuates the disparity penalty") {
  std::vector<double> disp = {1, 1, 3, 3, 1, 1, 3, 3, 1, 1, 3, 3};
  ImageBuffer flat = ImageBuffer::filled(3, 4, 1, 0.5);
  ImageBuffer edged = flat;
  for (int y = 0; y < 3; ++y)
    for (int x = 2; x < 4; ++x) edged.data[edged.index(y, x)] = 0.9;
  CHECK(smoothness(disp, 3, 4, edged) < smoothness(disp, 3, 4, flat));
}

TEST_CASE("smoothness rejects non-positive disparity") {
  ImageBuffer img = ImageBuffer::filled(2, 2, 1, 0.5);
  std::vector<double> disp = {1.0, -0.5, 1.0, 1.0};
  CHECK_THROWS_AS(smoothness(disp, 2, 2, img), NonPositiveValue);
}

TEST_CASE("box filter adjoint satisfies the inner-product identity") {
  Rng rng(33);
  int h = 7, w = 9;
  std::vector<double> x(static_cast<size_t>(h) * w), y(x.size());
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : y) v = rng.uniform(-1.0, 1.0);
  std::vector<double> Ax = box3_reflect(x, h, w);
  std::vector<double> Aty = box3_reflect_adjoint(y, h, w);
  double lhs = 0.0, rhs = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    lhs += Ax[i] * y[i];
    rhs += x[i] * Aty[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
