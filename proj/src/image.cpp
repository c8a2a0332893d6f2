#include "reflectdepth/image.hpp"

#include <cmath>

namespace reflectdepth {

namespace {

double clamp01eps(double v, std::int64_t& clamped) {
  if (v < kLogEps) {
    ++clamped;
    return kLogEps;
  }
  if (v > 1.0) {
    ++clamped;
    return 1.0;
  }
  return v;
}

}  // namespace

LogResult to_log(const ImageBuffer& img) {
  if (img.domain != Domain::Linear)
    throw InvalidArgument("to_log: image already in log domain");
  std::vector<double> out(img.size());
  std::int64_t clamped = 0;
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = std::log(clamp01eps(img.data[i], clamped));
  return {ImageBuffer(img.height, img.width, img.channels, Domain::Log,
                      std::move(out)),
          clamped};
}

LogResult from_log(const ImageBuffer& img) {
  if (img.domain != Domain::Log)
    throw InvalidArgument("from_log: image not in log domain");
  std::vector<double> out(img.size());
  std::int64_t clamped = 0;
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = clamp01eps(std::exp(img.data[i]), clamped);
  return {ImageBuffer(img.height, img.width, img.channels, Domain::Linear,
                      std::move(out)),
          clamped};
}

ImageBuffer clamp_linear(const ImageBuffer& img) {
  if (img.domain != Domain::Linear)
    throw InvalidArgument("clamp_linear: image not in linear domain");
  std::vector<double> out(img.size());
  std::int64_t clamped = 0;
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = clamp01eps(img.data[i], clamped);
  return ImageBuffer(img.height, img.width, img.channels, Domain::Linear,
                     std::move(out));
}

}  // namespace reflectdepth
