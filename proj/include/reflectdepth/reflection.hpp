#pragma once

#include <vector>

#include "reflectdepth/image.hpp"

namespace reflectdepth {

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kDistillMargin = 0.1;

// First and second moments of the per-pixel errors over valid pixels.
// Variance uses the population (1/n) form: the standardized fixture values
// the masks are validated against assume it.
struct ErrorStats {
  double mean = 0.0;
  double variance = 0.0;
  std::int64_t count = 0;
  bool degenerate = false;  // variance below kVarianceFloor
};

ErrorStats error_stats(const ErrorMap& errors);

struct MahalanobisMap {
  std::vector<double> z;  // zero at invalid pixels
  ErrorStats stats;
};

// z[p] = |E[p] - mean| / sqrt(variance) over valid pixels. A constant map is
// degenerate: z is all zero and the flag is set, not an error.
MahalanobisMap mahalanobis_map(const ErrorMap& errors);

// Generic d-dimensional Mahalanobis distance for vector samples; covariance
// given row-major. Used where per-channel errors are kept separate.
double mahalanobis_distance(const std::vector<double>& sample,
                            const std::vector<double>& mean,
                            const std::vector<double>& covariance);

// M_R = 0 (reflective) where z_L < z_I + margin. Invalid pixels get 1; they
// are excluded by the validity mask anyway.
BinaryMask reflection_mask(const ErrorMap& image_error,
                           const ErrorMap& diffuse_error, double margin);

// mean over valid pixels of M_R * M_auto * E; the denominator is the count
// of valid pixels, not of surviving ones.
double masked_depth_loss(const ErrorMap& image_error,
                         const BinaryMask& reflection,
                         const BinaryMask& auto_mask);

// L_total = intrinsic + depth + kSmoothnessWeight * smoothness.
double total_loss(double depth_loss, double intrinsic_loss, double smoothness);

}  // namespace reflectdepth
