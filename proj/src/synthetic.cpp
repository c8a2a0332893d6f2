#include "reflectdepth/synthetic.hpp"

#include <cmath>

#include "reflectdepth/parallel.hpp"
#include "reflectdepth/rng.hpp"

namespace reflectdepth {

namespace {

// Quintic-smoothstep value noise on a world-aligned lattice; C2 smooth so
// warped views interpolate cleanly.
double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double x, double y, std::uint64_t seed) {
  double fx = std::floor(x), fy = std::floor(y);
  auto ix = static_cast<std::int64_t>(fx);
  auto iy = static_cast<std::int64_t>(fy);
  double tx = fade(x - fx), ty = fade(y - fy);
  auto lattice = [&](std::int64_t a, std::int64_t b) {
    return hash_unit(static_cast<std::uint64_t>(a + 0x10000),
                     static_cast<std::uint64_t>(b + 0x10000), seed);
  };
  double v00 = lattice(ix, iy), v01 = lattice(ix + 1, iy);
  double v10 = lattice(ix, iy + 1), v11 = lattice(ix + 1, iy + 1);
  return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v01) +
         ty * ((1.0 - tx) * v10 + tx * v11);
}

struct SurfaceHit {
  Vec3 point;         // world
  Vec3 normal;        // unit, facing the cameras (-z side)
  double camera_z;    // depth in the camera frame
};

double surface_height(const SceneSpec& s, double x, double y) {
  if (s.relief_amplitude == 0.0) return s.plane_depth;
  return s.plane_depth + s.relief_amplitude * std::sin(s.relief_frequency * x) *
                             std::sin(s.relief_frequency * y);
}

SurfaceHit intersect(const SceneSpec& s, const Camera& cam, double u, double v) {
  Vec3 dir_cam{(u - cam.intrinsics.cx) / cam.intrinsics.fx,
               (v - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0};
  Vec3 dir = cam.pose.rotation * dir_cam;
  Vec3 origin = cam.pose.translation;
  if (dir.z <= 1e-9)
    throw NoIntersection("render: ray parallel to or away from the surface");

  double t = (s.plane_depth - origin.z) / dir.z;
  if (s.relief_amplitude != 0.0) {
    for (int it = 0; it < 25; ++it) {
      Vec3 p = origin + dir * t;
      double h = surface_height(s, p.x, p.y);
      double f = p.z - h;
      double hx = s.relief_amplitude * s.relief_frequency *
                  std::cos(s.relief_frequency * p.x) *
                  std::sin(s.relief_frequency * p.y);
      double hy = s.relief_amplitude * s.relief_frequency *
                  std::sin(s.relief_frequency * p.x) *
                  std::cos(s.relief_frequency * p.y);
      double df = dir.z - hx * dir.x - hy * dir.y;
      if (std::abs(df) < 1e-12) break;
      t -= f / df;
    }
  }
  if (!(t > 0.0)) throw NoIntersection("render: surface behind the camera");

  SurfaceHit hit;
  hit.point = origin + dir * t;
  if (s.relief_amplitude == 0.0) {
    hit.normal = {0.0, 0.0, -1.0};
  } else {
    double hx = s.relief_amplitude * s.relief_frequency *
                std::cos(s.relief_frequency * hit.point.x) *
                std::sin(s.relief_frequency * hit.point.y);
    double hy = s.relief_amplitude * s.relief_frequency *
                std::sin(s.relief_frequency * hit.point.x) *
                std::cos(s.relief_frequency * hit.point.y);
    hit.normal = Vec3{hx, hy, -1.0}.normalized();
  }
  hit.camera_z = cam.pose.inverse().apply(hit.point).z;
  return hit;
}

Vec3 albedo_at(const SceneSpec& s, double x, double y) {
  double cell = s.texture_scale * 0.01;  // feature size, centimeters -> meters
  if (cell <= 0.0) cell = 0.08;
  Vec3 a;
  double* ch[3] = {&a.x, &a.y, &a.z};
  if (s.texture == TextureKind::Checker || s.texture == TextureKind::CheckerNoise) {
    // Soft checker keeps interpolation error in warped views small.
    double band = std::tanh(3.0 * std::sin(3.14159265358979 * x / cell)) *
                  std::tanh(3.0 * std::sin(3.14159265358979 * y / cell));
    double base = 0.55 + 0.2 * band;
    a = {base, base, base};
  } else {
    a = {0.6, 0.6, 0.6};
  }
  if (s.texture == TextureKind::Noise || s.texture == TextureKind::CheckerNoise) {
    for (int c = 0; c < 3; ++c) {
      double n = 0.7 * value_noise(x / cell, y / cell, s.seed * 3 + c) +
                 0.3 * value_noise(2.0 * x / cell, 2.0 * y / cell,
                                   s.seed * 3 + c + 101);
      *ch[c] *= 0.55 + 0.75 * n;
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (*ch[c] < 0.08) *ch[c] = 0.08;
    if (*ch[c] > 0.95) *ch[c] = 0.95;
  }
  return a;
}

}  // namespace

RenderedView render_view(const SceneSpec& scene, const Camera& camera,
                         int height, int width) {
  camera.validate();
  if (scene.specular_strength < 0.0 || scene.specular_strength > 1.0)
    throw InvalidArgument("render: specular strength must lie in [0, 1]");
  if (height <= 0 || width <= 0)
    throw InvalidArgument("render: raster dimensions must be positive");
  int h = height, w = width;

  ImageBuffer image = ImageBuffer::filled(h, w, 3, 0.0);
  ImageBuffer diffuse = ImageBuffer::filled(h, w, 3, 0.0);
  ImageBuffer residual = ImageBuffer::filled(h, w, 1, 1.0);
  DepthMap depth = DepthMap::filled(h, w, scene.plane_depth);
  std::vector<double> lobe_term(static_cast<size_t>(h) * w, 0.0);

  Vec3 light = scene.light_dir.normalized();
  Vec3 cam_center = camera.pose.translation;
  double s = scene.specular_strength;

  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      SurfaceHit hit = intersect(scene, camera, x, y);
      depth.values[depth.index(y, x)] = hit.camera_z;

      Vec3 alb = albedo_at(scene, hit.point.x, hit.point.y);
      double shade = std::max(0.0, hit.normal.dot(light));
      Vec3 diff = alb * shade;

      double term = 0.0;
      if (s > 0.0) {
        Vec3 mirror = hit.normal * (2.0 * hit.normal.dot(light)) - light;
        Vec3 view = (cam_center - hit.point).normalized();
        double lobe = std::max(0.0, mirror.dot(view));
        term = s * std::pow(lobe, scene.specular_sharpness);
      }
      lobe_term[static_cast<size_t>(y) * w + x] = term;
      double res = 1.0 / (1.0 + term);
      residual.data[residual.index(y, x)] = res;

      double* dch[3] = {&diff.x, &diff.y, &diff.z};
      for (int c = 0; c < 3; ++c) {
        double dv = *dch[c];
        dv = dv < kLogEps ? kLogEps : (dv > 1.0 ? 1.0 : dv);
        diffuse.data[diffuse.index(y, x, c)] = dv;
        double iv = dv * res;
        image.data[image.index(y, x, c)] =
            iv < kLogEps ? kLogEps : (iv > 1.0 ? 1.0 : iv);
      }
    }
  });

  double max_term = 0.0;
  for (double t : lobe_term) max_term = std::max(max_term, t);
  std::vector<std::uint8_t> mask(lobe_term.size(), 0);
  if (s > 0.0 && max_term > 0.0)
    for (size_t i = 0; i < mask.size(); ++i)
      mask[i] = lobe_term[i] > kSpecularMaskThreshold * max_term ? 1 : 0;

  return {std::move(image), std::move(depth), std::move(diffuse),
          std::move(residual), BinaryMask(h, w, std::move(mask))};
}

Camera scene_camera(const SceneSpec& scene, int view_index, int n_views,
                    int height, int width) {
  if (view_index < 0 || view_index >= n_views || n_views < 2)
    throw InvalidArgument("scene camera: bad view index");
  Camera cam;
  cam.intrinsics.fx = cam.intrinsics.fy = 0.85 * width;
  cam.intrinsics.cx = (width - 1) / 2.0;
  cam.intrinsics.cy = (height - 1) / 2.0;
  if (view_index > 0) {
    double baseline = 0.08 * scene.plane_depth;
    double angle = 2.0 * 3.14159265358979 * (view_index - 1) /
                   std::max(1, n_views - 1);
    cam.pose.translation = {baseline * std::cos(angle),
                            baseline * std::sin(angle), 0.0};
  }
  return cam;
}

}  // namespace reflectdepth
