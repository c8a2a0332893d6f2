#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "reflectdepth/camera.hpp"
#include "reflectdepth/image.hpp"
#include "reflectdepth/rng.hpp"

namespace testsupport {

using namespace reflectdepth;

inline ImageBuffer random_image(Rng& rng, int h, int w, int c,
                                double lo = kLogEps, double hi = 1.0) {
  std::vector<double> data(static_cast<size_t>(h) * w * c);
  for (auto& v : data) v = rng.uniform(lo, hi);
  return ImageBuffer(h, w, c, Domain::Linear, std::move(data));
}

inline DepthMap random_depth(Rng& rng, int h, int w, double lo = 0.5,
                             double hi = 8.0) {
  std::vector<double> data(static_cast<size_t>(h) * w);
  for (auto& v : data) v = rng.uniform(lo, hi);
  return DepthMap(h, w, std::move(data));
}

inline BinaryMask random_mask(Rng& rng, int h, int w, double p_one = 0.5) {
  std::vector<std::uint8_t> data(static_cast<size_t>(h) * w);
  for (auto& v : data) v = rng.next_double() < p_one ? 1 : 0;
  return BinaryMask(h, w, std::move(data));
}

// Random proper rotation via axis-angle.
inline Mat3 random_rotation(Rng& rng, double max_angle = 3.0) {
  Vec3 axis{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0)};
  if (axis.norm() < 1e-6) axis = {1.0, 0.0, 0.0};
  return Mat3::rotation(axis, rng.uniform(-max_angle, max_angle));
}

inline RigidTransform random_transform(Rng& rng, double max_angle = 3.0,
                                       double max_t = 2.0) {
  return {random_rotation(rng, max_angle),
          Vec3{rng.uniform(-max_t, max_t), rng.uniform(-max_t, max_t),
               rng.uniform(-max_t, max_t)}};
}

// Unique scratch directory under the build tree, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("reflectdepth_test_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(dir_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path dir_;
};

}  // namespace testsupport
