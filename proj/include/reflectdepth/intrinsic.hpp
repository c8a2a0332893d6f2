#pragma once

#include <vector>

#include "reflectdepth/image.hpp"

namespace reflectdepth {

// Diffuse is 3-channel, residual is grayscale and broadcast across channels.
// Both live in the linear domain, values in [kLogEps, 1].
struct IntrinsicPair {
  ImageBuffer diffuse;
  ImageBuffer residual;

  IntrinsicPair(ImageBuffer d, ImageBuffer r);
};

struct IntrinsicLossWeights {
  double recon = 1.0;
  double cross = 1.0;
  double contrastive = 0.01;
  double margin = 5.0;
};

// exp(log L + log R), clamped to [kLogEps, 1].
ImageBuffer compose(const IntrinsicPair& pair);

// mean over pixels/channels of |log I - log L - log R|.
double recon_loss(const ImageBuffer& image, const IntrinsicPair& pair);

// mean over valid pixels/channels of |log I_r - log L_s2r - log R_r|.
// L_s2r is a warp output; `valid` is its validity mask.
double cross_recon_loss(const ImageBuffer& ref_image,
                        const ImageBuffer& warped_diffuse,
                        const ImageBuffer& ref_residual,
                        const BinaryMask& valid);

struct ContrastivePair {
  const ImageBuffer* warped_diffuse = nullptr;  // L_s2r of batch element i
  const ImageBuffer* ref_diffuse = nullptr;     // L_r of batch element i
};

// sum over ordered pairs i != j of max(margin - d(L_s2r_i, L_r_j), 0).
// The distance is the Euclidean norm over all elements divided by
// sqrt(pixel count); set raw_norm to use the unnormalized norm instead.
double contrastive_loss(const std::vector<ContrastivePair>& batch, double margin,
                        bool raw_norm = false);

// L' = exp(log I - log R), clamped to [kLogEps, 1]. Residual broadcast when
// single-channel.
ImageBuffer pseudo_diffuse(const ImageBuffer& image, const ImageBuffer& residual);

double intrinsic_total(double recon, double cross, double contrastive,
                       const IntrinsicLossWeights& weights);

}  // namespace reflectdepth
