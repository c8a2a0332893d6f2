#pragma once

#include <cstdint>
#include <vector>

#include "reflectdepth/errors.hpp"

namespace reflectdepth {

// Linear-domain values are clamped to [kLogEps, 1]; log-domain values live in
// [ln(kLogEps), 0].
inline constexpr double kLogEps = 1e-4;

// Depth bounds in meters.
inline constexpr double kMinDepth = 0.1;
inline constexpr double kMaxDepth = 10.0;

enum class Domain : std::uint8_t { Linear, Log };

// H x W x C raster, row-major, channel-interleaved. Treated as immutable
// once built: operations return new buffers.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  Domain domain = Domain::Linear;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int h, int w, int c, Domain d, std::vector<double> values)
      : height(h), width(w), channels(c), domain(d), data(std::move(values)) {
    if (h <= 0 || w <= 0 || (c != 1 && c != 3))
      throw InvalidArgument("image: dimensions must be positive, channels 1 or 3");
    if (data.size() != static_cast<size_t>(h) * w * c)
      throw InvalidArgument("image: data length != height*width*channels");
  }

  static ImageBuffer filled(int h, int w, int c, double value,
                            Domain d = Domain::Linear) {
    return ImageBuffer(h, w, c, d,
                       std::vector<double>(static_cast<size_t>(h) * w * c, value));
  }

  size_t index(int y, int x, int c = 0) const {
    return (static_cast<size_t>(y) * width + x) * channels + c;
  }
  double at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }
  size_t size() const { return data.size(); }
  bool same_shape(const ImageBuffer& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int h, int w, std::vector<double> v)
      : height(h), width(w), values(std::move(v)) {
    if (h <= 0 || w <= 0)
      throw InvalidArgument("depth: dimensions must be positive");
    if (values.size() != static_cast<size_t>(h) * w)
      throw InvalidArgument("depth: data length != height*width");
  }

  static DepthMap filled(int h, int w, double value) {
    return DepthMap(h, w, std::vector<double>(static_cast<size_t>(h) * w, value));
  }

  size_t index(int y, int x) const { return static_cast<size_t>(y) * width + x; }
  double at(int y, int x) const { return values[index(y, x)]; }
  bool same_shape(const DepthMap& o) const {
    return height == o.height && width == o.width;
  }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;  // each exactly 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w, std::vector<std::uint8_t> v)
      : height(h), width(w), values(std::move(v)) {
    if (h <= 0 || w <= 0)
      throw InvalidArgument("mask: dimensions must be positive");
    if (values.size() != static_cast<size_t>(h) * w)
      throw InvalidArgument("mask: data length != height*width");
    for (auto b : values)
      if (b != 0 && b != 1) throw InvalidArgument("mask: values must be 0 or 1");
  }

  static BinaryMask filled(int h, int w, std::uint8_t value) {
    return BinaryMask(h, w,
                      std::vector<std::uint8_t>(static_cast<size_t>(h) * w, value));
  }

  size_t index(int y, int x) const { return static_cast<size_t>(y) * width + x; }
  std::uint8_t at(int y, int x) const { return values[index(y, x)]; }
  bool same_shape(const BinaryMask& o) const {
    return height == o.height && width == o.width;
  }
  std::int64_t count(std::uint8_t v) const {
    std::int64_t n = 0;
    for (auto b : values) n += (b == v);
    return n;
  }
};

// Per-pixel scalar error with a validity mask. Errors at invalid pixels are
// zero and excluded from every reduction.
struct ErrorMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  BinaryMask valid;

  ErrorMap() = default;
  ErrorMap(int h, int w, std::vector<double> v, BinaryMask m)
      : height(h), width(w), values(std::move(v)), valid(std::move(m)) {
    if (values.size() != static_cast<size_t>(h) * w)
      throw InvalidArgument("error map: data length != height*width");
    if (valid.height != h || valid.width != w)
      throw DimensionMismatch("error map: validity mask shape mismatch");
    for (size_t i = 0; i < values.size(); ++i)
      if (!valid.values[i]) values[i] = 0.0;
  }

  size_t index(int y, int x) const { return static_cast<size_t>(y) * width + x; }
  double at(int y, int x) const { return values[index(y, x)]; }
  bool same_shape(const ErrorMap& o) const {
    return height == o.height && width == o.width;
  }
};

struct LogResult {
  ImageBuffer image;
  std::int64_t clamped = 0;  // inputs outside [kLogEps, 1] absorbed by the clamp
};

// ln(clamp(v, eps, 1)) per element.
LogResult to_log(const ImageBuffer& img);

// exp(v) per element, clamped back to [kLogEps, 1].
LogResult from_log(const ImageBuffer& img);

// clamp to [kLogEps, 1] in the linear domain.
ImageBuffer clamp_linear(const ImageBuffer& img);

}  // namespace reflectdepth
