#include "reflectdepth/metrics.hpp"

#include <cmath>

namespace reflectdepth {

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                           double d_min, double d_max) {
  if (!pred.same_shape(gt))
    throw DimensionMismatch("depth metrics: shape mismatch");

  DepthMetrics m;
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  std::int64_t a1 = 0, a2 = 0, a3 = 0;
  for (size_t i = 0; i < gt.values.size(); ++i) {
    double g = gt.values[i];
    if (g < d_min || g > d_max) continue;
    double p = pred.values[i];
    p = p < d_min ? d_min : (p > d_max ? d_max : p);
    ++m.valid_pixels;
    double diff = p - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    double dlog = std::log(p) - std::log(g);
    sq_log += dlog * dlog;
    double ratio = std::max(p / g, g / p);
    if (ratio < 1.25) ++a1;
    if (ratio < 1.25 * 1.25) ++a2;
    if (ratio < 1.25 * 1.25 * 1.25) ++a3;
  }
  if (m.valid_pixels == 0)
    throw NoValidPixels("depth metrics: no ground-truth pixels in range");
  double n = static_cast<double>(m.valid_pixels);
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sq_log / n);
  m.a1 = a1 / n;
  m.a2 = a2 / n;
  m.a3 = a3 / n;
  return m;
}

double mask_iou(const BinaryMask& pred, const BinaryMask& gt,
                std::uint8_t positive_class) {
  if (!pred.same_shape(gt)) throw DimensionMismatch("iou: shape mismatch");
  std::int64_t intersection = 0, uni = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    bool p = pred.values[i] == positive_class;
    bool g = gt.values[i] == positive_class;
    intersection += (p && g);
    uni += (p || g);
  }
  return uni == 0 ? 1.0 : static_cast<double>(intersection) / uni;
}

}  // namespace reflectdepth
