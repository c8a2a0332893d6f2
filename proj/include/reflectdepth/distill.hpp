#pragma once

#include "reflectdepth/image.hpp"

namespace reflectdepth {

// D_pseudo = M_R * D_org + (1 - M_R) * D_refl. Mask 1 selects the
// conventionally trained depth, 0 the reflection-aware one. Both inputs must
// lie within [kMinDepth, kMaxDepth].
DepthMap fuse_pseudo_depth(const DepthMap& depth_org, const DepthMap& depth_refl,
                           const BinaryMask& reflection);

// mean |log D_hat - log D_pseudo| over all pixels.
double distill_loss(const DepthMap& predicted, const DepthMap& pseudo);

}  // namespace reflectdepth
