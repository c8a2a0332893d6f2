#include "reflectdepth/geometry.hpp"

#include <cmath>

#include "reflectdepth/parallel.hpp"

namespace reflectdepth {

namespace {

constexpr double kMinSourceDepth = 1e-9;

inline Vec3 backproject(double u, double v, const Intrinsics& K) {
  return {(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
}

struct BilinearCell {
  int x0, y0, x1, y1;
  double fx, fy;
};

// Fractions within kIntegerSnap of a lattice point collapse onto it, so a
// projection that is the identity up to roundoff samples exactly.
constexpr double kIntegerSnap = 1e-9;

inline BilinearCell cell_at(double u, double v, int w, int h) {
  double cu = u < 0.0 ? 0.0 : (u > w - 1.0 ? w - 1.0 : u);
  double cv = v < 0.0 ? 0.0 : (v > h - 1.0 ? h - 1.0 : v);
  int x0 = static_cast<int>(std::floor(cu));
  int y0 = static_cast<int>(std::floor(cv));
  if (x0 >= w - 1) x0 = w - 2 < 0 ? 0 : w - 2;
  if (y0 >= h - 1) y0 = h - 2 < 0 ? 0 : h - 2;
  double fx = cu - x0, fy = cv - y0;
  if (fx < kIntegerSnap) {
    fx = 0.0;
  } else if (fx > 1.0 - kIntegerSnap && x0 + 1 <= w - 1) {
    ++x0;
    fx = 0.0;
  }
  if (fy < kIntegerSnap) {
    fy = 0.0;
  } else if (fy > 1.0 - kIntegerSnap && y0 + 1 <= h - 1) {
    ++y0;
    fy = 0.0;
  }
  int x1 = std::min(x0 + 1, w - 1);
  int y1 = std::min(y0 + 1, h - 1);
  return {x0, y0, x1, y1, fx, fy};
}

}  // namespace

Projection project_pixel(double u, double v, double depth, const Intrinsics& K,
                         const RigidTransform& ref_to_src) {
  if (!(depth > 0.0)) throw InvalidArgument("project_pixel: depth must be > 0");
  Vec3 point = ref_to_src.apply(backproject(u, v, K) * depth);
  if (point.z <= kMinSourceDepth) return {0.0, 0.0, point.z, false};
  return {K.fx * point.x / point.z + K.cx, K.fy * point.y / point.z + K.cy,
          point.z, true};
}

ProjectionJacobian project_pixel_jacobian(double u, double v, double depth,
                                          const Intrinsics& K,
                                          const RigidTransform& ref_to_src) {
  Vec3 dir = ref_to_src.rotation * backproject(u, v, K);  // d(point)/d(depth)
  Vec3 point = dir * depth + ref_to_src.translation;
  if (point.z <= kMinSourceDepth) return {};
  double inv_z = 1.0 / point.z;
  return {K.fx * (dir.x * point.z - point.x * dir.z) * inv_z * inv_z,
          K.fy * (dir.y * point.z - point.y * dir.z) * inv_z * inv_z};
}

PixelGrid projection_grid(const DepthMap& ref_depth, const Intrinsics& K,
                          const RigidTransform& ref_to_src) {
  PixelGrid grid;
  grid.height = ref_depth.height;
  grid.width = ref_depth.width;
  size_t n = static_cast<size_t>(grid.height) * grid.width;
  grid.u_hat.assign(n, 0.0);
  grid.v_hat.assign(n, 0.0);
  grid.valid.assign(n, 0);

  parallel_rows(grid.height, [&](int y) {
    for (int x = 0; x < grid.width; ++x) {
      size_t i = grid.index(y, x);
      Projection p = project_pixel(x, y, ref_depth.values[i], K, ref_to_src);
      bool inside = p.valid && p.u_hat >= -kIntegerSnap &&
                    p.u_hat <= grid.width - 1.0 + kIntegerSnap &&
                    p.v_hat >= -kIntegerSnap &&
                    p.v_hat <= grid.height - 1.0 + kIntegerSnap;
      grid.u_hat[i] = p.u_hat;
      grid.v_hat[i] = p.v_hat;
      grid.valid[i] = inside ? 1 : 0;
    }
  });
  return grid;
}

double bilinear_sample(const ImageBuffer& img, int channel, double u, double v) {
  BilinearCell c = cell_at(u, v, img.width, img.height);
  double v00 = img.at(c.y0, c.x0, channel), v01 = img.at(c.y0, c.x1, channel);
  double v10 = img.at(c.y1, c.x0, channel), v11 = img.at(c.y1, c.x1, channel);
  return (1.0 - c.fy) * ((1.0 - c.fx) * v00 + c.fx * v01) +
         c.fy * ((1.0 - c.fx) * v10 + c.fx * v11);
}

SampleGradient bilinear_position_gradient(const ImageBuffer& src, int channel,
                                          double u, double v) {
  BilinearCell c = cell_at(u, v, src.width, src.height);
  double v00 = src.at(c.y0, c.x0, channel), v01 = src.at(c.y0, c.x1, channel);
  double v10 = src.at(c.y1, c.x0, channel), v11 = src.at(c.y1, c.x1, channel);
  return {(1.0 - c.fy) * (v01 - v00) + c.fy * (v11 - v10),
          (1.0 - c.fx) * (v10 - v00) + c.fx * (v11 - v01)};
}

WarpResult warp_with_grid(const ImageBuffer& src, const PixelGrid& grid) {
  if (src.height != grid.height || src.width != grid.width)
    throw DimensionMismatch("warp: image and grid dimensions differ");
  ImageBuffer out = ImageBuffer::filled(src.height, src.width, src.channels, 0.0,
                                        src.domain);
  BinaryMask valid = BinaryMask::filled(src.height, src.width, 0);

  parallel_rows(src.height, [&](int y) {
    for (int x = 0; x < src.width; ++x) {
      size_t i = grid.index(y, x);
      if (!grid.valid[i]) continue;
      valid.values[i] = 1;
      for (int ch = 0; ch < src.channels; ++ch)
        out.data[out.index(y, x, ch)] =
            bilinear_sample(src, ch, grid.u_hat[i], grid.v_hat[i]);
    }
  });
  return {std::move(out), std::move(valid)};
}

WarpResult warp(const ImageBuffer& src, const DepthMap& ref_depth,
                const Intrinsics& K, const RigidTransform& ref_to_src) {
  if (src.height != ref_depth.height || src.width != ref_depth.width)
    throw DimensionMismatch("warp: image and depth dimensions differ");
  return warp_with_grid(src, projection_grid(ref_depth, K, ref_to_src));
}

void warp_backward_to_source(const ImageBuffer& grad_warped,
                             const PixelGrid& grid, ImageBuffer& grad_src) {
  if (!grad_warped.same_shape(grad_src) || grad_warped.height != grid.height ||
      grad_warped.width != grid.width)
    throw DimensionMismatch("warp backward: shape mismatch");
  int w = grid.width, h = grid.height, channels = grad_warped.channels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t i = grid.index(y, x);
      if (!grid.valid[i]) continue;
      BilinearCell c = cell_at(grid.u_hat[i], grid.v_hat[i], w, h);
      for (int ch = 0; ch < channels; ++ch) {
        double g = grad_warped.data[grad_warped.index(y, x, ch)];
        if (g == 0.0) continue;
        grad_src.data[grad_src.index(c.y0, c.x0, ch)] +=
            g * (1.0 - c.fy) * (1.0 - c.fx);
        grad_src.data[grad_src.index(c.y0, c.x1, ch)] += g * (1.0 - c.fy) * c.fx;
        grad_src.data[grad_src.index(c.y1, c.x0, ch)] += g * c.fy * (1.0 - c.fx);
        grad_src.data[grad_src.index(c.y1, c.x1, ch)] += g * c.fy * c.fx;
      }
    }
  }
}

}  // namespace reflectdepth
