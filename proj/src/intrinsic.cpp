#include "reflectdepth/intrinsic.hpp"

#include <cmath>

namespace reflectdepth {

namespace {

void check_linear_range(const ImageBuffer& img, const char* who) {
  if (img.domain != Domain::Linear)
    throw InvalidArgument(std::string(who) + ": linear domain required");
  for (double v : img.data)
    if (v < kLogEps - 1e-12 || v > 1.0 + 1e-12)
      throw InvalidArgument(std::string(who) + ": values outside [eps, 1]");
}

inline double log_at(const ImageBuffer& img, int y, int x, int ch) {
  // Residuals may be single-channel; broadcast across the image's channels.
  return std::log(img.at(y, x, img.channels == 1 ? 0 : ch));
}

}  // namespace

IntrinsicPair::IntrinsicPair(ImageBuffer d, ImageBuffer r)
    : diffuse(std::move(d)), residual(std::move(r)) {
  if (diffuse.height != residual.height || diffuse.width != residual.width)
    throw DimensionMismatch("intrinsic pair: diffuse/residual shape mismatch");
  check_linear_range(diffuse, "intrinsic pair diffuse");
  check_linear_range(residual, "intrinsic pair residual");
}

ImageBuffer compose(const IntrinsicPair& pair) {
  const ImageBuffer& L = pair.diffuse;
  std::vector<double> out(L.size());
  for (int y = 0; y < L.height; ++y)
    for (int x = 0; x < L.width; ++x)
      for (int ch = 0; ch < L.channels; ++ch) {
        double v = std::exp(log_at(L, y, x, ch) + log_at(pair.residual, y, x, ch));
        out[L.index(y, x, ch)] = v < kLogEps ? kLogEps : (v > 1.0 ? 1.0 : v);
      }
  return ImageBuffer(L.height, L.width, L.channels, Domain::Linear,
                     std::move(out));
}

double recon_loss(const ImageBuffer& image, const IntrinsicPair& pair) {
  if (image.height != pair.diffuse.height || image.width != pair.diffuse.width ||
      image.channels != pair.diffuse.channels)
    throw DimensionMismatch("recon loss: image/pair shape mismatch");
  double sum = 0.0;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int ch = 0; ch < image.channels; ++ch)
        sum += std::abs(log_at(image, y, x, ch) - log_at(pair.diffuse, y, x, ch) -
                        log_at(pair.residual, y, x, ch));
  return sum / image.size();
}

double cross_recon_loss(const ImageBuffer& ref_image,
                        const ImageBuffer& warped_diffuse,
                        const ImageBuffer& ref_residual,
                        const BinaryMask& valid) {
  if (ref_image.height != warped_diffuse.height ||
      ref_image.width != warped_diffuse.width ||
      ref_image.channels != warped_diffuse.channels)
    throw DimensionMismatch("cross loss: image shape mismatch");
  if (valid.height != ref_image.height || valid.width != ref_image.width)
    throw DimensionMismatch("cross loss: mask shape mismatch");

  double sum = 0.0;
  std::int64_t count = 0;
  for (int y = 0; y < ref_image.height; ++y)
    for (int x = 0; x < ref_image.width; ++x) {
      if (!valid.at(y, x)) continue;
      ++count;
      for (int ch = 0; ch < ref_image.channels; ++ch)
        sum += std::abs(log_at(ref_image, y, x, ch) -
                        log_at(warped_diffuse, y, x, ch) -
                        log_at(ref_residual, y, x, ch));
    }
  if (count == 0) throw EmptyValidSet("cross loss: no valid pixels");
  return sum / (static_cast<double>(count) * ref_image.channels);
}

double contrastive_loss(const std::vector<ContrastivePair>& batch, double margin,
                        bool raw_norm) {
  for (const auto& p : batch) {
    if (!p.warped_diffuse || !p.ref_diffuse)
      throw InvalidArgument("contrastive loss: null batch entry");
    if (!p.warped_diffuse->same_shape(*batch.front().warped_diffuse) ||
        !p.ref_diffuse->same_shape(*batch.front().warped_diffuse))
      throw DimensionMismatch("contrastive loss: batch shapes differ");
  }
  if (batch.size() < 2) return 0.0;

  const ImageBuffer& probe = *batch.front().warped_diffuse;
  double norm_div =
      raw_norm ? 1.0
               : std::sqrt(static_cast<double>(probe.height) * probe.width);
  double loss = 0.0;
  for (size_t i = 0; i < batch.size(); ++i)
    for (size_t j = 0; j < batch.size(); ++j) {
      if (i == j) continue;
      const ImageBuffer& a = *batch[i].warped_diffuse;
      const ImageBuffer& b = *batch[j].ref_diffuse;
      double sq = 0.0;
      for (size_t k = 0; k < a.size(); ++k) {
        double d = a.data[k] - b.data[k];
        sq += d * d;
      }
      double dist = std::sqrt(sq) / norm_div;
      if (dist < margin) loss += margin - dist;
    }
  return loss;
}

ImageBuffer pseudo_diffuse(const ImageBuffer& image, const ImageBuffer& residual) {
  if (image.height != residual.height || image.width != residual.width)
    throw DimensionMismatch("pseudo diffuse: shape mismatch");
  if (residual.channels != 1 && residual.channels != image.channels)
    throw DimensionMismatch("pseudo diffuse: residual channels incompatible");
  std::vector<double> out(image.size());
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int ch = 0; ch < image.channels; ++ch) {
        // exp(log I - log R) computed as the linear-domain quotient; bit-equal
        // to I where R is exactly 1, which the mask comparison relies on.
        double v = image.at(y, x, ch) /
                   residual.at(y, x, residual.channels == 1 ? 0 : ch);
        out[image.index(y, x, ch)] = v < kLogEps ? kLogEps : (v > 1.0 ? 1.0 : v);
      }
  return ImageBuffer(image.height, image.width, image.channels, Domain::Linear,
                     std::move(out));
}

double intrinsic_total(double recon, double cross, double contrastive,
                       const IntrinsicLossWeights& weights) {
  double total = weights.recon * recon + weights.cross * cross +
                 weights.contrastive * contrastive;
  if (!std::isfinite(total))
    throw NonFiniteError("intrinsic total: non-finite loss");
  return total;
}

}  // namespace reflectdepth
