#pragma once

#include <string>

#include "reflectdepth/image.hpp"

namespace reflectdepth {

// 8-bit PNG, 1 or 3 channels; values map to [0,1] by v/255.
ImageBuffer load_png(const std::string& path);
void save_png(const ImageBuffer& img, const std::string& path);

// Masks round-trip as 0/255 gray PNGs.
BinaryMask load_mask_png(const std::string& path);
void save_mask_png(const BinaryMask& mask, const std::string& path);

// PFM float32 rasters ("Pf" = 1 channel, "PF" = 3), scale sign encodes
// endianness; rows are stored bottom-to-top. Values pass through unscaled.
ImageBuffer load_pfm(const std::string& path);
void save_pfm(const ImageBuffer& img, const std::string& path);

DepthMap load_depth_pfm(const std::string& path);
void save_depth_pfm(const DepthMap& depth, const std::string& path);

}  // namespace reflectdepth
