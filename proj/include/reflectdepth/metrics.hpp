#pragma once

#include <cstdint>

#include "reflectdepth/image.hpp"

namespace reflectdepth {

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double a1 = 0.0;  // delta < 1.25
  double a2 = 0.0;  // delta < 1.25^2
  double a3 = 0.0;  // delta < 1.25^3
  std::int64_t valid_pixels = 0;
};

// Standard depth statistics over the pixels whose ground truth lies inside
// [d_min, d_max]; predictions are clamped to the same range first. No median
// scaling.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                           double d_min = kMinDepth, double d_max = kMaxDepth);

// Intersection over union of the chosen class; 1 when both masks are empty.
double mask_iou(const BinaryMask& pred, const BinaryMask& gt,
                std::uint8_t positive_class);

}  // namespace reflectdepth
