#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reflectdepth/camera.hpp"
#include "reflectdepth/image.hpp"

namespace reflectdepth {

struct FrameRecord {
  std::string image_path;
  Camera camera;
  // Optional ground-truth residual raster (1-channel PFM) for this frame,
  // used when diffuse images are derived from known intrinsics.
  std::optional<std::string> residual_path;
};

struct SequenceManifest {
  FrameRecord reference;
  std::vector<FrameRecord> sources;
  std::optional<std::string> gt_depth_path;
  std::optional<std::string> gt_mask_path;

  void validate() const;
};

// JSON schema:
//   {"reference": {"image": str, "K": [9 row-major], "pose": [16 row-major],
//                  "residual": str?},
//    "sources": [...same...],
//    "gt_depth": str?, "gt_mask": str?}
SequenceManifest load_manifest(const std::string& path);
void save_manifest(const SequenceManifest& manifest, const std::string& path);

// Frames loaded into memory, all relative paths resolved against the
// manifest's directory.
struct LoadedFrame {
  ImageBuffer image;
  Camera camera;
  std::optional<ImageBuffer> residual;
};

struct LoadedSequence {
  LoadedFrame reference;
  std::vector<LoadedFrame> sources;
  std::optional<DepthMap> gt_depth;
  std::optional<BinaryMask> gt_mask;
};

LoadedSequence load_sequence(const std::string& manifest_path);

}  // namespace reflectdepth
