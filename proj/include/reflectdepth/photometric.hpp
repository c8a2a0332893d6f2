#pragma once

#include <vector>

#include "reflectdepth/image.hpp"

namespace reflectdepth {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kDefaultAlpha = 0.85;
inline constexpr double kSmoothnessWeight = 1e-3;

// 3x3 mean filter with reflected borders (index -1 maps to 1). The adjoint
// scatters through the same index map so gradients match bit for bit.
std::vector<double> box3_reflect(const std::vector<double>& plane, int h, int w);
std::vector<double> box3_reflect_adjoint(const std::vector<double>& grad,
                                         int h, int w);

// Per-pixel single-scale SSIM in [-1, 1], 3x3 statistics, channel-averaged.
// Inputs must be linear-domain and same shape.
std::vector<double> ssim_map(const ImageBuffer& a, const ImageBuffer& b);

// alpha*(1-SSIM)/2 + (1-alpha)*mean_c|ref-other|, masked by `valid`.
ErrorMap photometric_error(const ImageBuffer& ref, const ImageBuffer& other,
                           const BinaryMask& valid, double alpha);

// Gradients of sum_p upstream[p] * error[p] with respect to both images.
// `upstream` has one weight per pixel (masks and reduction factors folded in
// by the caller); entries at invalid pixels must be zero.
struct PhotometricGrad {
  std::vector<double> d_ref;    // H*W*C
  std::vector<double> d_other;  // H*W*C
};
PhotometricGrad photometric_error_backward(const ImageBuffer& ref,
                                           const ImageBuffer& other,
                                           const std::vector<double>& upstream,
                                           double alpha);

// Per-pixel minimum over maps; a pixel is invalid only if invalid everywhere.
ErrorMap min_reprojection(const std::vector<ErrorMap>& errors);

// Index of the map attaining the minimum at each valid pixel (first map wins
// ties); -1 where all maps are invalid.
std::vector<int> min_reprojection_argmin(const std::vector<ErrorMap>& errors);

// M = 1 iff warping strictly improves the match against the unwarped source.
BinaryMask auto_mask(const ImageBuffer& ref, const ImageBuffer& src_unwarped,
                     const ImageBuffer& warped, const BinaryMask& valid,
                     double alpha);

// Same test on precomputed (possibly min-fused) error maps.
BinaryMask auto_mask_from_errors(const ErrorMap& warped_error,
                                 const ErrorMap& identity_error);

// Edge-aware first-order smoothness of mean-normalized disparity.
double smoothness(const std::vector<double>& disparity, int h, int w,
                  const ImageBuffer& ref);

// d(smoothness)/d(disparity).
std::vector<double> smoothness_backward(const std::vector<double>& disparity,
                                        int h, int w, const ImageBuffer& ref);

}  // namespace reflectdepth
