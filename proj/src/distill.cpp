#include "reflectdepth/distill.hpp"

#include <cmath>

namespace reflectdepth {

DepthMap fuse_pseudo_depth(const DepthMap& depth_org, const DepthMap& depth_refl,
                           const BinaryMask& reflection) {
  if (!depth_org.same_shape(depth_refl) ||
      reflection.height != depth_org.height ||
      reflection.width != depth_org.width)
    throw DimensionMismatch("fuse: shape mismatch");
  for (const DepthMap* d : {&depth_org, &depth_refl})
    for (double v : d->values)
      if (v < kMinDepth || v > kMaxDepth)
        throw OutOfRange("fuse: depth outside [d_min, d_max]");

  std::vector<double> out(depth_org.values.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = reflection.values[i] ? depth_org.values[i] : depth_refl.values[i];
  return DepthMap(depth_org.height, depth_org.width, std::move(out));
}

double distill_loss(const DepthMap& predicted, const DepthMap& pseudo) {
  if (!predicted.same_shape(pseudo))
    throw DimensionMismatch("distill loss: shape mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < predicted.values.size(); ++i) {
    if (!(predicted.values[i] > 0.0) || !(pseudo.values[i] > 0.0))
      throw NonPositiveValue("distill loss: depths must be positive");
    sum += std::abs(std::log(predicted.values[i]) - std::log(pseudo.values[i]));
  }
  return sum / predicted.values.size();
}

}  // namespace reflectdepth
