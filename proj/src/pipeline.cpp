#include "reflectdepth/pipeline.hpp"

#include "reflectdepth/intrinsic.hpp"

namespace reflectdepth {

namespace {

// Per-pixel mean over valid sources; used when min fusion is switched off.
ErrorMap mean_reprojection(const std::vector<ErrorMap>& errors) {
  if (errors.empty()) throw EmptyInput("mean_reprojection: no error maps");
  const ErrorMap& first = errors.front();
  size_t n = first.values.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::uint8_t> valid(n, 0);
  for (size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (const auto& e : errors) {
      if (!e.valid.values[i]) continue;
      sum += e.values[i];
      ++count;
    }
    if (count > 0) {
      out[i] = sum / count;
      valid[i] = 1;
    }
  }
  return ErrorMap(first.height, first.width, std::move(out),
                  BinaryMask(first.height, first.width, std::move(valid)));
}

}  // namespace

FrameSet to_frame_set(const LoadedSequence& seq) {
  FrameSet fs;
  fs.ref_image = seq.reference.image;
  fs.ref_camera = seq.reference.camera;
  for (const auto& s : seq.sources) {
    fs.src_images.push_back(s.image);
    fs.src_cameras.push_back(s.camera);
  }
  return fs;
}

std::vector<WarpResult> warp_all_sources(const FrameSet& frames,
                                         const DepthMap& ref_depth) {
  std::vector<WarpResult> out;
  out.reserve(frames.src_images.size());
  for (size_t s = 0; s < frames.src_images.size(); ++s)
    out.push_back(warp(frames.src_images[s], ref_depth,
                       frames.ref_camera.intrinsics,
                       relative_transform(frames.ref_camera,
                                          frames.src_cameras[s])));
  return out;
}

ErrorMap fuse_errors(const std::vector<ErrorMap>& errors, bool min_fused) {
  return min_fused ? min_reprojection(errors) : mean_reprojection(errors);
}

ReflectionPipelineResult reflection_pipeline(
    const FrameSet& frames, const DepthMap& ref_depth,
    const std::vector<std::optional<ImageBuffer>>& residuals, double alpha,
    double margin, bool min_fused) {
  if (frames.src_images.empty())
    throw EmptyInput("pipeline: at least one source frame required");
  if (!residuals.empty() && residuals.size() != frames.src_images.size() + 1)
    throw DimensionMismatch("pipeline: one residual per frame expected");

  auto pseudo = [&](const ImageBuffer& img, size_t frame_idx) {
    if (frame_idx < residuals.size() && residuals[frame_idx])
      return pseudo_diffuse(img, *residuals[frame_idx]);
    return clamp_linear(img);  // residual 1 leaves the image unchanged
  };

  ImageBuffer ref = clamp_linear(frames.ref_image);
  ImageBuffer pseudo_ref = pseudo(frames.ref_image, 0);

  std::vector<ErrorMap> image_errors, identity_errors, diffuse_errors;
  for (size_t s = 0; s < frames.src_images.size(); ++s) {
    RigidTransform r2s =
        relative_transform(frames.ref_camera, frames.src_cameras[s]);
    PixelGrid grid =
        projection_grid(ref_depth, frames.ref_camera.intrinsics, r2s);

    ImageBuffer src = clamp_linear(frames.src_images[s]);
    WarpResult warped_img = warp_with_grid(src, grid);
    image_errors.push_back(
        photometric_error(ref, warped_img.image, warped_img.valid, alpha));
    identity_errors.push_back(photometric_error(
        ref, src, BinaryMask::filled(ref.height, ref.width, 1), alpha));

    ImageBuffer pseudo_src = pseudo(frames.src_images[s], s + 1);
    WarpResult warped_pseudo = warp_with_grid(pseudo_src, grid);
    diffuse_errors.push_back(photometric_error(
        pseudo_ref, warped_pseudo.image, warped_pseudo.valid, alpha));
  }

  ReflectionPipelineResult out{fuse_errors(image_errors, min_fused),
                               fuse_errors(diffuse_errors, min_fused),
                               {},
                               {},
                               {},
                               {},
                               0.0};
  out.z_image = mahalanobis_map(out.image_error);
  out.z_diffuse = mahalanobis_map(out.diffuse_error);
  out.reflection = reflection_mask(out.image_error, out.diffuse_error, margin);
  out.auto_mask = auto_mask_from_errors(
      out.image_error, fuse_errors(identity_errors, min_fused));

  std::int64_t valid = 0, flagged = 0;
  for (size_t i = 0; i < out.image_error.values.size(); ++i) {
    if (!out.image_error.valid.values[i]) continue;
    ++valid;
    flagged += out.reflection.values[i] == 0;
  }
  out.masked_fraction = valid > 0 ? static_cast<double>(flagged) / valid : 0.0;
  return out;
}

}  // namespace reflectdepth
