#pragma once

#include <optional>
#include <vector>

#include "reflectdepth/geometry.hpp"
#include "reflectdepth/manifest.hpp"
#include "reflectdepth/photometric.hpp"
#include "reflectdepth/reflection.hpp"

namespace reflectdepth {

// One reference frame plus source frames, already in memory.
struct FrameSet {
  ImageBuffer ref_image;
  Camera ref_camera;
  std::vector<ImageBuffer> src_images;
  std::vector<Camera> src_cameras;
};

FrameSet to_frame_set(const LoadedSequence& seq);

struct ReflectionPipelineResult {
  ErrorMap image_error;     // E_I, min-fused over sources
  ErrorMap diffuse_error;   // E_L on pseudo-diffuse pairs
  MahalanobisMap z_image;
  MahalanobisMap z_diffuse;
  BinaryMask reflection;    // M_R
  BinaryMask auto_mask;     // warping beats the unwarped source
  double masked_fraction = 0.0;  // valid pixels with M_R = 0
};

// E_I from RGB pairs, E_L from pseudo-diffuse pairs (Eq. 9 route: the
// residual is divided out of each image before warping), then the
// Mahalanobis comparison. Residuals are per frame: index 0 is the
// reference, 1.. the sources; a missing entry means residual = 1.
ReflectionPipelineResult reflection_pipeline(
    const FrameSet& frames, const DepthMap& ref_depth,
    const std::vector<std::optional<ImageBuffer>>& residuals, double alpha,
    double margin, bool min_fused = true);

// Warp every source into the reference view with the given depth.
std::vector<WarpResult> warp_all_sources(const FrameSet& frames,
                                         const DepthMap& ref_depth);

// min_reprojection when min_fused, per-pixel mean over valid sources
// otherwise.
ErrorMap fuse_errors(const std::vector<ErrorMap>& errors, bool min_fused);

}  // namespace reflectdepth
