#include <doctest.h>

#include <cmath>

#include "reflectdepth/geometry.hpp"
#include "support/test_support.hpp"

using namespace reflectdepth;
using testsupport::Rng;
using testsupport::random_image;
using testsupport::random_transform;

namespace {

Intrinsics test_intrinsics() { return {60.0, 55.0, 31.5, 23.5}; }

}  // namespace

TEST_CASE("identity pose projects pixels onto themselves") {
  Intrinsics K = test_intrinsics();
  Projection p = project_pixel(10.0, 20.0, 3.0, K, RigidTransform::identity());
  REQUIRE(p.valid);
  CHECK(p.u_hat == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(p.v_hat == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(p.source_depth == doctest::Approx(3.0));
}

TEST_CASE("on-axis point with z translation") {
  Intrinsics K{50.0, 50.0, 0.0, 0.0};
  RigidTransform r2s{Mat3::identity(), {0.0, 0.0, -1.0}};
  Projection p = project_pixel(0.0, 0.0, 2.0, K, r2s);
  REQUIRE(p.valid);
  CHECK(p.u_hat == doctest::Approx(0.0));
  CHECK(p.v_hat == doctest::Approx(0.0));
  CHECK(p.source_depth == doctest::Approx(1.0));
}

TEST_CASE("point behind the source camera is flagged, not thrown") {
  Intrinsics K = test_intrinsics();
  RigidTransform r2s{Mat3::identity(), {0.0, 0.0, -5.0}};
  Projection p = project_pixel(10.0, 10.0, 2.0, K, r2s);
  CHECK_FALSE(p.valid);
}

TEST_CASE("non-positive depth is rejected") {
  CHECK_THROWS_AS(
      project_pixel(0, 0, 0.0, test_intrinsics(), RigidTransform::identity()),
      InvalidArgument);
}

TEST_CASE("project then inverse transform recovers the pixel") {
  // Oracle: composing with the explicit inverse transform must return to the
  // starting pixel and depth.
  Intrinsics K = test_intrinsics();
  Rng rng(123);
  int recovered = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RigidTransform r2s = random_transform(rng, 2.5, 1.5);
    double u = rng.uniform(0.0, 63.0), v = rng.uniform(0.0, 47.0);
    double d = rng.uniform(0.5, 6.0);
    Projection fwd = project_pixel(u, v, d, K, r2s);
    if (!fwd.valid) continue;
    Projection back =
        project_pixel(fwd.u_hat, fwd.v_hat, fwd.source_depth, K, r2s.inverse());
    REQUIRE(back.valid);
    CHECK(std::abs(back.u_hat - u) < 1e-6);
    CHECK(std::abs(back.v_hat - v) < 1e-6);
    CHECK(std::abs(back.source_depth - d) < 1e-6);
    ++recovered;
  }
  CHECK(recovered > 100);  // most random poses keep the point in front
}

TEST_CASE("projection jacobian matches finite differences") {
  Intrinsics K = test_intrinsics();
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    RigidTransform r2s = random_transform(rng, 1.0, 0.5);
    double u = rng.uniform(0.0, 63.0), v = rng.uniform(0.0, 47.0);
    double d = rng.uniform(0.8, 5.0);
    Projection p = project_pixel(u, v, d, K, r2s);
    if (!p.valid) continue;
    ProjectionJacobian jac = project_pixel_jacobian(u, v, d, K, r2s);
    double h = 1e-6;
    Projection p1 = project_pixel(u, v, d + h, K, r2s);
    Projection p2 = project_pixel(u, v, d - h, K, r2s);
    REQUIRE(p1.valid);
    REQUIRE(p2.valid);
    CHECK(jac.du_ddepth ==
          doctest::Approx((p1.u_hat - p2.u_hat) / (2 * h)).epsilon(1e-5));
    CHECK(jac.dv_ddepth ==
          doctest::Approx((p1.v_hat - p2.v_hat) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("identity warp reproduces the image bit-exactly") {
  Rng rng(42);
  ImageBuffer src = random_image(rng, 24, 32, 3);
  DepthMap depth = testsupport::random_depth(rng, 24, 32);
  WarpResult result =
      warp(src, depth, test_intrinsics(), RigidTransform::identity());
  CHECK(result.valid.count(1) == 24 * 32);
  for (size_t i = 0; i < src.size(); ++i)
    CHECK(result.image.data[i] == src.data[i]);
}

TEST_CASE("fronto-parallel x-translation equals the closed-form shift") {
  // Constant depth d, source camera at (b, 0, 0): every pixel samples the
  // source at u - fx*b/d. A linear ramp makes bilinear sampling exact, so
  // the check holds for fractional shifts too.
  Intrinsics K{64.0, 64.0, 15.5, 11.5};
  int h = 24, w = 32;
  double d = 2.0, b = 0.1;
  double disp = K.fx * b / d;  // 3.2 px

  std::vector<double> ramp(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      ramp[static_cast<size_t>(y) * w + x] = 0.01 + 0.02 * x + 0.011 * y;
  ImageBuffer src(h, w, 1, Domain::Linear, std::move(ramp));
  DepthMap depth = DepthMap::filled(h, w, d);
  // World poses: reference identity, source translated by +b along x.
  Camera ref{K, RigidTransform::identity()};
  Camera srcCam{K, {Mat3::identity(), {b, 0.0, 0.0}}};
  WarpResult result = warp(src, depth, K, relative_transform(ref, srcCam));

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double su = x - disp;
      if (su < 0.0 || su > w - 1.0) {
        CHECK(result.valid.at(y, x) == 0);
        continue;
      }
      REQUIRE(result.valid.at(y, x) == 1);
      double expected = 0.01 + 0.02 * su + 0.011 * y;
      CHECK(std::abs(result.image.at(y, x) - expected) < 1e-5);
    }
}

TEST_CASE("integer-disparity shift matches exactly on textured images") {
  Intrinsics K{50.0, 50.0, 15.5, 11.5};
  int h = 24, w = 32;
  double d = 2.5;
  double b = 3.0 * d / K.fx;  // disparity exactly 3 px
  Rng rng(99);
  ImageBuffer src = random_image(rng, h, w, 3);
  DepthMap depth = DepthMap::filled(h, w, d);
  Camera ref{K, RigidTransform::identity()};
  Camera srcCam{K, {Mat3::identity(), {b, 0.0, 0.0}}};
  WarpResult result = warp(src, depth, K, relative_transform(ref, srcCam));
  for (int y = 0; y < h; ++y)
    for (int x = 3; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(result.image.at(y, x, c) ==
              doctest::Approx(src.at(y, x - 3, c)).epsilon(1e-12));
}

TEST_CASE("pose pushing points behind the camera invalidates everything") {
  Rng rng(4);
  ImageBuffer src = random_image(rng, 12, 16, 1);
  DepthMap depth = DepthMap::filled(12, 16, 1.0);
  RigidTransform r2s{Mat3::identity(), {0.0, 0.0, -10.0}};
  WarpResult result = warp(src, depth, test_intrinsics(), r2s);
  CHECK(result.valid.count(1) == 0);
  for (double v : result.image.data) CHECK(v == 0.0);
}

TEST_CASE("bilinear samples stay inside the 4-neighbor hull") {
  Rng rng(31);
  ImageBuffer src = random_image(rng, 10, 14, 1);
  for (int trial = 0; trial < 500; ++trial) {
    double u = rng.uniform(0.0, 13.0), v = rng.uniform(0.0, 9.0);
    double s = bilinear_sample(src, 0, u, v);
    int x0 = static_cast<int>(u), y0 = static_cast<int>(v);
    double lo = 1e300, hi = -1e300;
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx) {
        double n = src.at(std::min(y0 + dy, 9), std::min(x0 + dx, 13));
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
    CHECK(s >= lo - 1e-12);
    CHECK(s <= hi + 1e-12);
  }
}

TEST_CASE("warp rejects mismatched shapes") {
  Rng rng(8);
  ImageBuffer src = random_image(rng, 4, 4, 1);
  DepthMap depth = DepthMap::filled(4, 5, 1.0);
  CHECK_THROWS_AS(warp(src, depth, test_intrinsics(), RigidTransform::identity()),
                  DimensionMismatch);
}

TEST_CASE("warp adjoint agrees with the forward operator") {
  // <warp(x), g> must equal <x, warp^T(g)> for a fixed grid.
  Rng rng(55);
  int h = 10, w = 12;
  ImageBuffer src = random_image(rng, h, w, 1);
  DepthMap depth = testsupport::random_depth(rng, h, w, 1.0, 3.0);
  RigidTransform r2s{Mat3::rotation({0, 1, 0}, 0.03), {0.05, -0.02, 0.0}};
  PixelGrid grid = projection_grid(depth, test_intrinsics(), r2s);

  WarpResult fwd = warp_with_grid(src, grid);
  ImageBuffer g = random_image(rng, h, w, 1);
  for (size_t i = 0; i < g.size(); ++i)
    if (!fwd.valid.values[i]) g.data[i] = 0.0;

  double lhs = 0.0;
  for (size_t i = 0; i < g.size(); ++i) lhs += fwd.image.data[i] * g.data[i];

  ImageBuffer gx = ImageBuffer::filled(h, w, 1, 0.0);
  warp_backward_to_source(g, grid, gx);
  double rhs = 0.0;
  for (size_t i = 0; i < gx.size(); ++i) rhs += gx.data[i] * src.data[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
