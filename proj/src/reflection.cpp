#include "reflectdepth/reflection.hpp"

#include <cmath>

#include "reflectdepth/photometric.hpp"

namespace reflectdepth {

ErrorStats error_stats(const ErrorMap& errors) {
  ErrorStats stats;
  double sum = 0.0;
  for (size_t i = 0; i < errors.values.size(); ++i) {
    if (!errors.valid.values[i]) continue;
    sum += errors.values[i];
    ++stats.count;
  }
  if (stats.count < 2)
    throw InvalidArgument("error stats: need at least 2 valid pixels");
  stats.mean = sum / stats.count;
  double sq = 0.0;
  for (size_t i = 0; i < errors.values.size(); ++i) {
    if (!errors.valid.values[i]) continue;
    double d = errors.values[i] - stats.mean;
    sq += d * d;
  }
  stats.variance = sq / stats.count;
  stats.degenerate = stats.variance < kVarianceFloor;
  return stats;
}

MahalanobisMap mahalanobis_map(const ErrorMap& errors) {
  MahalanobisMap out;
  out.stats = error_stats(errors);
  out.z.assign(errors.values.size(), 0.0);
  if (out.stats.degenerate) return out;
  double inv_sigma = 1.0 / std::sqrt(out.stats.variance);
  for (size_t i = 0; i < errors.values.size(); ++i)
    if (errors.valid.values[i])
      out.z[i] = std::abs(errors.values[i] - out.stats.mean) * inv_sigma;
  return out;
}

double mahalanobis_distance(const std::vector<double>& sample,
                            const std::vector<double>& mean,
                            const std::vector<double>& covariance) {
  size_t d = sample.size();
  if (mean.size() != d || covariance.size() != d * d)
    throw DimensionMismatch("mahalanobis: dimension mismatch");
  // Cholesky solve of sigma y = (x - mu).
  std::vector<double> chol(covariance);
  for (size_t j = 0; j < d; ++j) {
    double diag = chol[j * d + j];
    for (size_t k = 0; k < j; ++k) diag -= chol[j * d + k] * chol[j * d + k];
    if (diag < kVarianceFloor)
      throw InvalidArgument("mahalanobis: covariance not positive definite");
    diag = std::sqrt(diag);
    chol[j * d + j] = diag;
    for (size_t i = j + 1; i < d; ++i) {
      double v = chol[i * d + j];
      for (size_t k = 0; k < j; ++k) v -= chol[i * d + k] * chol[j * d + k];
      chol[i * d + j] = v / diag;
    }
  }
  std::vector<double> y(d);
  for (size_t i = 0; i < d; ++i) {
    double v = sample[i] - mean[i];
    for (size_t k = 0; k < i; ++k) v -= chol[i * d + k] * y[k];
    y[i] = v / chol[i * d + i];
  }
  double sq = 0.0;
  for (double v : y) sq += v * v;
  return std::sqrt(sq);
}

BinaryMask reflection_mask(const ErrorMap& image_error,
                           const ErrorMap& diffuse_error, double margin) {
  if (!image_error.same_shape(diffuse_error))
    throw DimensionMismatch("reflection mask: error map shapes differ");
  if (margin < 0.0)
    throw InvalidArgument("reflection mask: margin must be >= 0");

  MahalanobisMap z_i = mahalanobis_map(image_error);
  MahalanobisMap z_l = mahalanobis_map(diffuse_error);
  size_t n = image_error.values.size();
  std::vector<std::uint8_t> bits(n, 1);
  for (size_t i = 0; i < n; ++i) {
    if (!image_error.valid.values[i]) continue;  // stays 1, excluded elsewhere
    if (z_l.z[i] < z_i.z[i] + margin) bits[i] = 0;
  }
  return BinaryMask(image_error.height, image_error.width, std::move(bits));
}

double masked_depth_loss(const ErrorMap& image_error,
                         const BinaryMask& reflection,
                         const BinaryMask& auto_mask) {
  if (reflection.height != image_error.height ||
      reflection.width != image_error.width ||
      !reflection.same_shape(auto_mask))
    throw DimensionMismatch("masked depth loss: shape mismatch");
  double sum = 0.0;
  std::int64_t valid = 0;
  for (size_t i = 0; i < image_error.values.size(); ++i) {
    if (!image_error.valid.values[i]) continue;
    ++valid;
    if (reflection.values[i] && auto_mask.values[i]) sum += image_error.values[i];
  }
  if (valid == 0) throw EmptyValidSet("masked depth loss: no valid pixels");
  return sum / valid;
}

double total_loss(double depth_loss, double intrinsic_loss, double smoothness) {
  double total = intrinsic_loss + depth_loss + kSmoothnessWeight * smoothness;
  if (!std::isfinite(total)) throw NonFiniteError("total loss: non-finite");
  return total;
}

}  // namespace reflectdepth
