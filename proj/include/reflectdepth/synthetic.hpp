#pragma once

#include <cstdint>
#include <vector>

#include "reflectdepth/camera.hpp"
#include "reflectdepth/image.hpp"

namespace reflectdepth {

// Specular term threshold for the ground-truth mask: a pixel is flagged when
// its lobe term exceeds this fraction of the view's peak term.
inline constexpr double kSpecularMaskThreshold = 0.05;

enum class TextureKind : std::uint8_t { Checker, Noise, CheckerNoise };

// A textured surface (plane, optionally with sinusoidal relief) lit by a
// directional light, with a Phong-style view-dependent lobe as the residual
// generator. Renders are deterministic in the seed.
struct SceneSpec {
  double plane_depth = 1.5;       // meters, along world +z
  double relief_amplitude = 0.0;  // meters
  double relief_frequency = 4.0;  // radians per meter
  TextureKind texture = TextureKind::CheckerNoise;
  double texture_scale = 8.0;     // noise feature size, pixels at plane_depth
  Vec3 light_dir{0.25, -0.2, -0.95};  // from surface toward the light
  double specular_strength = 0.0;     // s in [0, 1]; 0 disables the lobe
  double specular_sharpness = 400.0;  // Phong exponent k
  std::uint64_t seed = 0;
};

struct RenderedView {
  ImageBuffer image;        // clamp(diffuse * residual)
  DepthMap gt_depth;        // camera-frame z of the surface hit
  ImageBuffer gt_diffuse;   // albedo * max(0, n.l), 3 channels
  ImageBuffer gt_residual;  // 1 channel; exactly 1 where no specularity
  BinaryMask gt_specular_mask;
};

RenderedView render_view(const SceneSpec& scene, const Camera& camera,
                         int height, int width);

// Canonical camera rig for a scene: view 0 is the reference at the origin
// looking +z; the rest translate on a small ring around it.
Camera scene_camera(const SceneSpec& scene, int view_index, int n_views,
                    int height, int width);

}  // namespace reflectdepth
