#pragma once

#include <utility>
#include <vector>

#include "reflectdepth/camera.hpp"
#include "reflectdepth/image.hpp"

namespace reflectdepth {

// Real-valued source-image coordinates per reference pixel, plus validity.
// A pixel is valid iff 0 <= u_hat <= width-1, 0 <= v_hat <= height-1 and the
// projected source depth is positive.
struct PixelGrid {
  int height = 0;
  int width = 0;
  std::vector<double> u_hat;
  std::vector<double> v_hat;
  std::vector<std::uint8_t> valid;

  size_t index(int y, int x) const { return static_cast<size_t>(y) * width + x; }
};

struct Projection {
  double u_hat = 0.0;
  double v_hat = 0.0;
  double source_depth = 0.0;
  bool valid = false;  // false when the point lands behind/at the source camera
};

// Back-projects (u, v, depth) with K^-1, applies the reference-to-source
// transform, reprojects with K. Depth must be positive.
Projection project_pixel(double u, double v, double depth, const Intrinsics& K,
                         const RigidTransform& ref_to_src);

// d(u_hat, v_hat)/d(depth) at fixed pixel, for chaining through the warp.
struct ProjectionJacobian {
  double du_ddepth = 0.0;
  double dv_ddepth = 0.0;
};
ProjectionJacobian project_pixel_jacobian(double u, double v, double depth,
                                          const Intrinsics& K,
                                          const RigidTransform& ref_to_src);

PixelGrid projection_grid(const DepthMap& ref_depth, const Intrinsics& K,
                          const RigidTransform& ref_to_src);

// Bilinear sample of a single channel at (u, v); caller guarantees the
// coordinates are inside [0, w-1] x [0, h-1].
double bilinear_sample(const ImageBuffer& img, int channel, double u, double v);

struct WarpResult {
  ImageBuffer image;   // invalid pixels are 0
  BinaryMask valid;
};

// Inverse warp: output[u,v] = bilinear(src at projected coords). Source and
// reference depth must share dimensions.
WarpResult warp(const ImageBuffer& src, const DepthMap& ref_depth,
                const Intrinsics& K, const RigidTransform& ref_to_src);

WarpResult warp_with_grid(const ImageBuffer& src, const PixelGrid& grid);

// Adjoint of warp_with_grid for a fixed grid: scatters d(loss)/d(warped)
// into d(loss)/d(src). Shapes must match the forward call.
void warp_backward_to_source(const ImageBuffer& grad_warped,
                             const PixelGrid& grid, ImageBuffer& grad_src);

// d(warped[y,x,c])/d(u_hat) and /d(v_hat) for every pixel, evaluated on the
// forward grid; used when gradients flow into the sampling positions.
struct SampleGradient {
  double du = 0.0;
  double dv = 0.0;
};
SampleGradient bilinear_position_gradient(const ImageBuffer& src, int channel,
                                          double u, double v);

}  // namespace reflectdepth
