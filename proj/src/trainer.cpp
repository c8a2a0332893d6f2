#include "reflectdepth/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "reflectdepth/rng.hpp"
#include "reflectdepth/synthetic.hpp"

namespace reflectdepth {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

constexpr double kLnEps = -9.210340371976182;  // ln(1e-4)

struct LossSelect {
  bool depth = true;
  bool smooth = true;
  bool recon = true;
  bool cross = true;
  bool contrastive = true;
};

struct SceneParams {
  std::vector<double> depth_logit;                  // H*W
  std::vector<std::vector<double>> diffuse_logit;   // per frame, H*W*3
  std::vector<std::vector<double>> residual_logit;  // per frame, H*W
};

using SceneGrad = SceneParams;

SceneGrad zero_grad_like(const SceneParams& p) {
  SceneGrad g;
  g.depth_logit.assign(p.depth_logit.size(), 0.0);
  g.diffuse_logit.resize(p.diffuse_logit.size());
  g.residual_logit.resize(p.residual_logit.size());
  for (size_t f = 0; f < p.diffuse_logit.size(); ++f) {
    g.diffuse_logit[f].assign(p.diffuse_logit[f].size(), 0.0);
    g.residual_logit[f].assign(p.residual_logit[f].size(), 0.0);
  }
  return g;
}

struct StepMasks {
  BinaryMask reflection;
  BinaryMask auto_m;
};

// Immutable per-fit data: frames in order (0 = reference), clamped linear
// images, their logs, and the relative transforms.
struct SceneData {
  const FrameSet* frames = nullptr;
  std::vector<ImageBuffer> images;               // clamped, [0] = reference
  std::vector<std::vector<double>> log_image;    // per frame, H*W*3
  std::vector<RigidTransform> ref_to_src;
  int h = 0, w = 0;
  size_t n_frames() const { return images.size(); }
  size_t n_sources() const { return ref_to_src.size(); }
};

SceneData make_scene_data(const FrameSet& frames) {
  if (frames.src_images.empty())
    throw EmptyInput("fit: at least one source frame required");
  if (frames.src_images.size() != frames.src_cameras.size())
    throw DimensionMismatch("fit: source image/camera count mismatch");
  SceneData data;
  data.frames = &frames;
  data.h = frames.ref_image.height;
  data.w = frames.ref_image.width;
  data.images.push_back(clamp_linear(frames.ref_image));
  for (const auto& src : frames.src_images) {
    if (!src.same_shape(frames.ref_image))
      throw DimensionMismatch("fit: frames must share dimensions");
    data.images.push_back(clamp_linear(src));
  }
  for (const auto& img : data.images) {
    std::vector<double> lg(img.size());
    for (size_t i = 0; i < lg.size(); ++i) lg[i] = std::log(img.data[i]);
    data.log_image.push_back(std::move(lg));
  }
  for (const auto& cam : frames.src_cameras)
    data.ref_to_src.push_back(relative_transform(frames.ref_camera, cam));
  return data;
}

// Log-domain field from unconstrained logits: value = -softplus(q), clamped
// from below at ln(eps). The clamp zeroes the gradient.
struct LogField {
  std::vector<double> value;
  std::vector<double> dvalue;  // d(value)/d(logit); 0 where clamped
};

LogField make_log_field(const std::vector<double>& logit) {
  LogField f;
  f.value.resize(logit.size());
  f.dvalue.resize(logit.size());
  for (size_t i = 0; i < logit.size(); ++i) {
    double v = -softplus(logit[i]);
    if (v < kLnEps) {
      f.value[i] = kLnEps;
      f.dvalue[i] = 0.0;
    } else {
      f.value[i] = v;
      f.dvalue[i] = -sigmoid(logit[i]);
    }
  }
  return f;
}

struct FrameFields {
  LogField log_diffuse;        // H*W*3
  LogField log_residual;       // H*W
  ImageBuffer diffuse_linear;  // 3 channels
  ImageBuffer residual_linear; // 1 channel
};

struct LossBreakdown {
  double depth = 0.0;
  double smooth = 0.0;
  double recon = 0.0;
  double cross = 0.0;
  double contrastive = 0.0;
  double masked_fraction = 0.0;

  double total(const FitConfig& cfg) const {
    return cfg.weights.recon * recon + cfg.weights.cross * cross +
           cfg.weights.contrastive * contrastive + depth +
           cfg.smoothness_weight * smooth;
  }
};

struct SceneForward {
  std::vector<double> disparity;
  std::vector<double> ddisp_dlogit;
  DepthMap depth;
  std::vector<FrameFields> fields;          // [0] = reference
  std::vector<PixelGrid> grids;             // per source
  std::vector<WarpResult> warped_image;     // I_s2r
  std::vector<WarpResult> warped_diffuse;   // predicted L_s2r
  std::vector<ErrorMap> image_errors;
  ErrorMap fused_image_error;
  std::vector<int> argmin_image;
  StepMasks masks;
  LossBreakdown losses;  // contrastive filled at batch level
};

FrameFields make_frame_fields(const SceneData& data, const SceneParams& params,
                              size_t frame) {
  FrameFields f{make_log_field(params.diffuse_logit[frame]),
                make_log_field(params.residual_logit[frame]),
                {},
                {}};
  std::vector<double> dl(f.log_diffuse.value.size());
  for (size_t i = 0; i < dl.size(); ++i) dl[i] = std::exp(f.log_diffuse.value[i]);
  f.diffuse_linear = ImageBuffer(data.h, data.w, 3, Domain::Linear, std::move(dl));
  std::vector<double> rl(f.log_residual.value.size());
  for (size_t i = 0; i < rl.size(); ++i)
    rl[i] = std::exp(f.log_residual.value[i]);
  f.residual_linear = ImageBuffer(data.h, data.w, 1, Domain::Linear,
                                  std::move(rl));
  return f;
}

SceneForward scene_forward(const SceneData& data, const SceneParams& params,
                           const FitConfig& cfg, const LossSelect& select,
                           const StepMasks* frozen) {
  SceneForward out;
  size_t n_px = static_cast<size_t>(data.h) * data.w;
  double disp_lo = 1.0 / cfg.max_depth, disp_hi = 1.0 / cfg.min_depth;

  out.disparity.resize(n_px);
  out.ddisp_dlogit.resize(n_px);
  std::vector<double> depth(n_px);
  for (size_t i = 0; i < n_px; ++i) {
    double s = sigmoid(params.depth_logit[i]);
    out.disparity[i] = disp_lo + (disp_hi - disp_lo) * s;
    out.ddisp_dlogit[i] = (disp_hi - disp_lo) * s * (1.0 - s);
    depth[i] = 1.0 / out.disparity[i];
  }
  out.depth = DepthMap(data.h, data.w, std::move(depth));

  for (size_t f = 0; f < data.n_frames(); ++f)
    out.fields.push_back(make_frame_fields(data, params, f));

  const ImageBuffer& ref = data.images[0];
  const Intrinsics& K = data.frames->ref_camera.intrinsics;
  bool need_diffuse_warp =
      select.cross || (select.contrastive && cfg.use_contrastive);
  for (size_t s = 0; s < data.n_sources(); ++s) {
    out.grids.push_back(projection_grid(out.depth, K, data.ref_to_src[s]));
    out.warped_image.push_back(
        warp_with_grid(data.images[s + 1], out.grids[s]));
    out.image_errors.push_back(photometric_error(ref, out.warped_image[s].image,
                                                 out.warped_image[s].valid,
                                                 cfg.alpha));
    if (need_diffuse_warp)
      out.warped_diffuse.push_back(
          warp_with_grid(out.fields[s + 1].diffuse_linear, out.grids[s]));
  }
  out.fused_image_error = fuse_errors(out.image_errors, cfg.min_fused_errors);
  if (cfg.min_fused_errors)
    out.argmin_image = min_reprojection_argmin(out.image_errors);

  if (frozen) {
    out.masks = *frozen;
  } else {
    if (cfg.use_auto_mask) {
      std::vector<ErrorMap> identity;
      BinaryMask all = BinaryMask::filled(data.h, data.w, 1);
      for (size_t s = 0; s < data.n_sources(); ++s)
        identity.push_back(
            photometric_error(ref, data.images[s + 1], all, cfg.alpha));
      out.masks.auto_m = auto_mask_from_errors(
          out.fused_image_error, fuse_errors(identity, cfg.min_fused_errors));
    } else {
      out.masks.auto_m = BinaryMask::filled(data.h, data.w, 1);
    }
    if (cfg.use_reflection_mask) {
      ImageBuffer pseudo_ref =
          pseudo_diffuse(data.images[0], out.fields[0].residual_linear);
      std::vector<ErrorMap> pseudo_errors;
      for (size_t s = 0; s < data.n_sources(); ++s) {
        ImageBuffer pseudo_src = pseudo_diffuse(
            data.images[s + 1], out.fields[s + 1].residual_linear);
        WarpResult wp = warp_with_grid(pseudo_src, out.grids[s]);
        pseudo_errors.push_back(
            photometric_error(pseudo_ref, wp.image, wp.valid, cfg.alpha));
      }
      out.masks.reflection = reflection_mask(
          out.fused_image_error, fuse_errors(pseudo_errors, cfg.min_fused_errors),
          cfg.mask_margin);
    } else {
      out.masks.reflection = BinaryMask::filled(data.h, data.w, 1);
    }
  }

  if (select.depth)
    out.losses.depth = masked_depth_loss(out.fused_image_error,
                                         out.masks.reflection, out.masks.auto_m);
  if (select.smooth)
    out.losses.smooth = smoothness(out.disparity, data.h, data.w, ref);

  if (select.recon) {
    double sum = 0.0;
    for (size_t f = 0; f < data.n_frames(); ++f) {
      const auto& ff = out.fields[f];
      double fsum = 0.0;
      for (size_t p = 0; p < n_px; ++p)
        for (int c = 0; c < 3; ++c) {
          size_t k = p * 3 + c;
          fsum += std::abs(data.log_image[f][k] - ff.log_diffuse.value[k] -
                           ff.log_residual.value[p]);
        }
      sum += fsum / (static_cast<double>(n_px) * 3.0);
    }
    out.losses.recon = sum / data.n_frames();
  }

  if (select.cross) {
    double sum = 0.0;
    int contributing = 0;
    for (size_t s = 0; s < data.n_sources(); ++s) {
      const WarpResult& wd = out.warped_diffuse[s];
      double ssum = 0.0;
      std::int64_t count = 0;
      for (size_t p = 0; p < n_px; ++p) {
        if (!wd.valid.values[p]) continue;
        ++count;
        for (int c = 0; c < 3; ++c) {
          size_t k = p * 3 + c;
          ssum += std::abs(data.log_image[0][k] - std::log(wd.image.data[k]) -
                           out.fields[0].log_residual.value[p]);
        }
      }
      if (count == 0) continue;
      sum += ssum / (static_cast<double>(count) * 3.0);
      ++contributing;
    }
    if (contributing == 0)
      throw EmptyValidSet("fit: every source warp is fully invalid");
    out.losses.cross = sum / contributing;
  }

  std::int64_t valid = 0, flagged = 0;
  for (size_t p = 0; p < n_px; ++p) {
    if (!out.fused_image_error.valid.values[p]) continue;
    ++valid;
    flagged += out.masks.reflection.values[p] == 0;
  }
  out.losses.masked_fraction =
      valid > 0 ? static_cast<double>(flagged) / valid : 0.0;
  return out;
}

// Accumulates d(total)/d(depth map value) through one warped image:
// grad_other is d(total)/d(warped values); positions move with depth.
void warped_grad_to_depth(const SceneData& data, const SceneForward& fwd,
                          const ImageBuffer& src, size_t s,
                          const std::vector<double>& grad_other,
                          std::vector<double>& d_depth) {
  const PixelGrid& grid = fwd.grids[s];
  const Intrinsics& K = data.frames->ref_camera.intrinsics;
  const RigidTransform& r2s = data.ref_to_src[s];
  size_t n_px = grid.u_hat.size();
  int channels = src.channels;
  for (size_t p = 0; p < n_px; ++p) {
    if (!grid.valid[p]) continue;
    double du = 0.0, dv = 0.0;
    bool any = false;
    for (int c = 0; c < channels; ++c) {
      double g = grad_other[p * channels + c];
      if (g == 0.0) continue;
      SampleGradient sg =
          bilinear_position_gradient(src, c, grid.u_hat[p], grid.v_hat[p]);
      du += g * sg.du;
      dv += g * sg.dv;
      any = true;
    }
    if (!any) continue;
    int y = static_cast<int>(p) / grid.width;
    int x = static_cast<int>(p) % grid.width;
    ProjectionJacobian jac =
        project_pixel_jacobian(x, y, fwd.depth.values[p], K, r2s);
    d_depth[p] += du * jac.du_ddepth + dv * jac.dv_ddepth;
  }
}

void scene_backward(const SceneData& data, const FitConfig& cfg,
                    const LossSelect& select, const SceneForward& fwd,
                    double scene_weight, SceneGrad& grad) {
  size_t n_px = static_cast<size_t>(data.h) * data.w;
  std::vector<double> d_depth(n_px, 0.0);  // d(total)/d(depth meters)

  // Masked photometric depth loss.
  if (select.depth) {
    std::int64_t n_valid = 0;
    for (size_t p = 0; p < n_px; ++p)
      n_valid += fwd.fused_image_error.valid.values[p];
    if (n_valid > 0) {
      double base = scene_weight / n_valid;
      std::vector<int> valid_sources(cfg.min_fused_errors ? 0 : n_px, 0);
      if (!cfg.min_fused_errors)
        for (size_t p = 0; p < n_px; ++p)
          for (size_t s = 0; s < data.n_sources(); ++s)
            valid_sources[p] += fwd.image_errors[s].valid.values[p];
      for (size_t s = 0; s < data.n_sources(); ++s) {
        std::vector<double> upstream(n_px, 0.0);
        bool any = false;
        for (size_t p = 0; p < n_px; ++p) {
          if (!fwd.fused_image_error.valid.values[p]) continue;
          if (!fwd.masks.reflection.values[p] || !fwd.masks.auto_m.values[p])
            continue;
          if (cfg.min_fused_errors) {
            if (fwd.argmin_image[p] != static_cast<int>(s)) continue;
            upstream[p] = base;
          } else {
            if (!fwd.image_errors[s].valid.values[p]) continue;
            upstream[p] = base / valid_sources[p];
          }
          any = true;
        }
        if (!any) continue;
        PhotometricGrad pg = photometric_error_backward(
            data.images[0], fwd.warped_image[s].image, upstream, cfg.alpha);
        warped_grad_to_depth(data, fwd, data.images[s + 1], s, pg.d_other,
                             d_depth);
      }
    }
  }

  // Smoothness on disparity.
  if (select.smooth && cfg.smoothness_weight != 0.0) {
    std::vector<double> ds =
        smoothness_backward(fwd.disparity, data.h, data.w, data.images[0]);
    double wgt = scene_weight * cfg.smoothness_weight;
    for (size_t p = 0; p < n_px; ++p)
      grad.depth_logit[p] += wgt * ds[p] * fwd.ddisp_dlogit[p];
  }

  // Reconstruction.
  if (select.recon && cfg.weights.recon != 0.0) {
    double coeff = scene_weight * cfg.weights.recon /
                   (static_cast<double>(data.n_frames()) * n_px * 3.0);
    for (size_t f = 0; f < data.n_frames(); ++f) {
      const auto& ff = fwd.fields[f];
      for (size_t p = 0; p < n_px; ++p) {
        double rsum = 0.0;
        for (int c = 0; c < 3; ++c) {
          size_t k = p * 3 + c;
          double r = data.log_image[f][k] - ff.log_diffuse.value[k] -
                     ff.log_residual.value[p];
          double sg = sgn(r);
          grad.diffuse_logit[f][k] += -sg * coeff * ff.log_diffuse.dvalue[k];
          rsum += sg;
        }
        grad.residual_logit[f][p] +=
            -rsum * coeff * ff.log_residual.dvalue[p];
      }
    }
  }

  // Cross reconstruction.
  if (select.cross && cfg.weights.cross != 0.0) {
    int contributing = 0;
    std::vector<std::int64_t> counts(data.n_sources(), 0);
    for (size_t s = 0; s < data.n_sources(); ++s) {
      for (size_t p = 0; p < n_px; ++p)
        counts[s] += fwd.warped_diffuse[s].valid.values[p];
      contributing += counts[s] > 0;
    }
    for (size_t s = 0; s < data.n_sources(); ++s) {
      if (counts[s] == 0) continue;
      double coeff = scene_weight * cfg.weights.cross /
                     (static_cast<double>(contributing) * counts[s] * 3.0);
      const WarpResult& wd = fwd.warped_diffuse[s];
      ImageBuffer grad_warped =
          ImageBuffer::filled(data.h, data.w, 3, 0.0);
      for (size_t p = 0; p < n_px; ++p) {
        if (!wd.valid.values[p]) continue;
        double rsum = 0.0;
        for (int c = 0; c < 3; ++c) {
          size_t k = p * 3 + c;
          double r = data.log_image[0][k] - std::log(wd.image.data[k]) -
                     fwd.fields[0].log_residual.value[p];
          double sg = sgn(r);
          rsum += sg;
          grad_warped.data[k] = -sg * coeff / wd.image.data[k];
        }
        grad.residual_logit[0][p] +=
            -rsum * coeff * fwd.fields[0].log_residual.dvalue[p];
      }
      ImageBuffer grad_src = ImageBuffer::filled(data.h, data.w, 3, 0.0);
      warp_backward_to_source(grad_warped, fwd.grids[s], grad_src);
      const auto& ff = fwd.fields[s + 1];
      for (size_t k = 0; k < grad_src.size(); ++k)
        grad.diffuse_logit[s + 1][k] += grad_src.data[k] *
                                        ff.diffuse_linear.data[k] *
                                        ff.log_diffuse.dvalue[k];
      if (cfg.cross_grads_to_depth)
        warped_grad_to_depth(data, fwd, ff.diffuse_linear, s, grad_warped.data,
                             d_depth);
    }
  }

  // Chain d(depth) -> d(disparity) -> d(logit).
  for (size_t p = 0; p < n_px; ++p) {
    if (d_depth[p] == 0.0) continue;
    double disp = fwd.disparity[p];
    grad.depth_logit[p] +=
        d_depth[p] * (-1.0 / (disp * disp)) * fwd.ddisp_dlogit[p];
  }
}

struct BatchForward {
  std::vector<SceneForward> scenes;
  double contrastive = 0.0;
  double total = 0.0;
};

BatchForward batch_forward(const std::vector<SceneData>& scenes,
                           const std::vector<SceneParams>& params,
                           const FitConfig& cfg, const LossSelect& select,
                           const std::vector<StepMasks>* frozen) {
  BatchForward out;
  for (size_t i = 0; i < scenes.size(); ++i)
    out.scenes.push_back(scene_forward(scenes[i], params[i], cfg, select,
                                       frozen ? &(*frozen)[i] : nullptr));

  if (select.contrastive && cfg.use_contrastive && scenes.size() >= 2) {
    std::vector<ContrastivePair> batch;
    for (const auto& sf : out.scenes)
      batch.push_back({&sf.warped_diffuse[0].image,
                       &sf.fields[0].diffuse_linear});
    out.contrastive = contrastive_loss(batch, cfg.weights.margin,
                                       cfg.contrastive_raw_norm);
  }

  double per_scene = 0.0;
  for (auto& sf : out.scenes) {
    sf.losses.contrastive = 0.0;
    per_scene += cfg.weights.recon * sf.losses.recon +
                 cfg.weights.cross * sf.losses.cross + sf.losses.depth +
                 cfg.smoothness_weight * sf.losses.smooth;
  }
  out.total = per_scene / scenes.size() +
              cfg.weights.contrastive * out.contrastive;
  return out;
}

void contrastive_backward(const std::vector<SceneData>& scenes,
                          const FitConfig& cfg, const BatchForward& fwd,
                          std::vector<SceneGrad>& grads) {
  size_t b = scenes.size();
  if (b < 2) return;
  const ImageBuffer& probe = fwd.scenes[0].warped_diffuse[0].image;
  double norm_div =
      cfg.contrastive_raw_norm
          ? 1.0
          : std::sqrt(static_cast<double>(probe.height) * probe.width);
  size_t n = probe.size();

  std::vector<std::vector<double>> d_warped(b, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> d_ref(b, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < b; ++i)
    for (size_t j = 0; j < b; ++j) {
      if (i == j) continue;
      const ImageBuffer& a = fwd.scenes[i].warped_diffuse[0].image;
      const ImageBuffer& rj = fwd.scenes[j].fields[0].diffuse_linear;
      double sq = 0.0;
      for (size_t k = 0; k < n; ++k) {
        double d = a.data[k] - rj.data[k];
        sq += d * d;
      }
      double raw = std::sqrt(sq);
      double dist = raw / norm_div;
      if (dist >= cfg.weights.margin || raw < 1e-12) continue;
      double f = -cfg.weights.contrastive / (raw * norm_div);
      for (size_t k = 0; k < n; ++k) {
        double d = a.data[k] - rj.data[k];
        d_warped[i][k] += f * d;
        d_ref[j][k] -= f * d;
      }
    }

  for (size_t i = 0; i < b; ++i) {
    const SceneForward& sf = fwd.scenes[i];
    ImageBuffer gw(probe.height, probe.width, 3, Domain::Linear, d_warped[i]);
    ImageBuffer gs = ImageBuffer::filled(probe.height, probe.width, 3, 0.0);
    warp_backward_to_source(gw, sf.grids[0], gs);
    const auto& src_fields = sf.fields[1];
    for (size_t k = 0; k < n; ++k)
      grads[i].diffuse_logit[1][k] += gs.data[k] *
                                      src_fields.diffuse_linear.data[k] *
                                      src_fields.log_diffuse.dvalue[k];
    const auto& ref_fields = sf.fields[0];
    for (size_t k = 0; k < n; ++k)
      grads[i].diffuse_logit[0][k] += d_ref[i][k] *
                                      ref_fields.diffuse_linear.data[k] *
                                      ref_fields.log_diffuse.dvalue[k];
  }
}

std::vector<SceneGrad> batch_backward(const std::vector<SceneData>& scenes,
                                      const std::vector<SceneParams>& params,
                                      const FitConfig& cfg,
                                      const LossSelect& select,
                                      const BatchForward& fwd) {
  std::vector<SceneGrad> grads;
  for (const auto& p : params) grads.push_back(zero_grad_like(p));
  double scene_weight = 1.0 / scenes.size();
  for (size_t i = 0; i < scenes.size(); ++i)
    scene_backward(scenes[i], cfg, select, fwd.scenes[i], scene_weight,
                   grads[i]);
  if (select.contrastive && cfg.use_contrastive)
    contrastive_backward(scenes, cfg, fwd, grads);
  return grads;
}

double depth_to_logit(double depth_m, const FitConfig& cfg) {
  double disp_lo = 1.0 / cfg.max_depth, disp_hi = 1.0 / cfg.min_depth;
  double disp = 1.0 / depth_m;
  double s = (disp - disp_lo) / (disp_hi - disp_lo);
  s = std::min(std::max(s, 1e-6), 1.0 - 1e-6);
  return std::log(s / (1.0 - s));
}

double log_value_to_logit(double log_value) {
  // Inverse of value = -softplus(logit).
  double x = std::max(1e-4, -log_value);
  return std::log(std::expm1(x));
}

SceneParams init_params(const SceneData& data, const FitConfig& cfg, Rng& rng) {
  SceneParams p;
  size_t n_px = static_cast<size_t>(data.h) * data.w;
  double w0 = depth_to_logit(cfg.init_depth, cfg);
  p.depth_logit.resize(n_px);
  for (size_t i = 0; i < n_px; ++i)
    p.depth_logit[i] = w0 + 1e-3 * rng.uniform(-1.0, 1.0);

  // Diffuse starts at the image itself, residual near 1.
  for (size_t f = 0; f < data.n_frames(); ++f) {
    std::vector<double> dl(n_px * 3);
    for (size_t k = 0; k < dl.size(); ++k)
      dl[k] = log_value_to_logit(data.log_image[f][k]);
    p.diffuse_logit.push_back(std::move(dl));
    p.residual_logit.emplace_back(n_px, log_value_to_logit(-0.01));
  }
  return p;
}

FitResult make_result(const SceneData& data, const SceneForward& fwd,
                      std::vector<FitTraceRow> trace) {
  FitResult res{fwd.depth,
                ResidualField{data.h, data.w, fwd.fields[0].log_residual.value},
                fwd.fields[0].diffuse_linear,
                fwd.masks.reflection,
                std::move(trace)};
  return res;
}

}  // namespace

void FitConfig::validate() const {
  if (steps < 0) throw InvalidArgument("fit config: steps must be >= 0");
  if (!(learning_rate > 0.0))
    throw InvalidArgument("fit config: learning rate must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument("fit config: alpha must lie in [0, 1]");
  if (!(min_depth > 0.0) || !(max_depth > min_depth))
    throw InvalidArgument("fit config: need 0 < min_depth < max_depth");
  if (mask_margin < 0.0)
    throw InvalidArgument("fit config: mask margin must be >= 0");
  if (weights.recon < 0.0 || weights.cross < 0.0 || weights.contrastive < 0.0 ||
      !(weights.margin > 0.0))
    throw InvalidArgument("fit config: bad loss weights");
  if (!(init_depth >= min_depth && init_depth <= max_depth))
    throw InvalidArgument("fit config: init depth outside bounds");
}

ImageBuffer ResidualField::to_linear() const {
  std::vector<double> out(log_values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_values[i]);
  return ImageBuffer(height, width, 1, Domain::Linear, std::move(out));
}

std::string trace_to_csv(const std::vector<FitTraceRow>& trace) {
  std::string csv = "step,L_depth,L_recon,L_cross,L_cts,L_total,masked_fraction\n";
  char line[256];
  for (const auto& row : trace) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  row.step, row.depth_loss, row.recon, row.cross,
                  row.contrastive, row.total, row.masked_fraction);
    csv += line;
  }
  return csv;
}

std::vector<FitResult> fit_batch(const std::vector<FrameSet>& frame_sets,
                                 const FitConfig& cfg) {
  cfg.validate();
  if (frame_sets.empty()) throw EmptyInput("fit: no scenes");

  std::vector<SceneData> scenes;
  for (const auto& fs : frame_sets) scenes.push_back(make_scene_data(fs));

  Rng rng(cfg.seed);
  std::vector<SceneParams> params;
  for (const auto& sd : scenes) params.push_back(init_params(sd, cfg, rng));

  LossSelect select;  // everything on; switches shape the forward itself
  std::vector<std::vector<FitTraceRow>> traces(scenes.size());

  auto record = [&](int step, const BatchForward& fwd) {
    for (size_t i = 0; i < scenes.size(); ++i) {
      const LossBreakdown& l = fwd.scenes[i].losses;
      traces[i].push_back({step, l.depth, l.recon, l.cross, fwd.contrastive,
                           fwd.total, l.masked_fraction});
    }
    if (!std::isfinite(fwd.total))
      throw DivergenceDetected("fit: loss became non-finite at step " +
                               std::to_string(step));
  };

  for (int step = 0; step < cfg.steps; ++step) {
    BatchForward fwd = batch_forward(scenes, params, cfg, select, nullptr);
    record(step, fwd);
    std::vector<SceneGrad> grads =
        batch_backward(scenes, params, cfg, select, fwd);
    for (size_t i = 0; i < scenes.size(); ++i) {
      for (size_t p = 0; p < params[i].depth_logit.size(); ++p)
        params[i].depth_logit[p] -= cfg.learning_rate * grads[i].depth_logit[p];
      for (size_t f = 0; f < params[i].diffuse_logit.size(); ++f) {
        for (size_t k = 0; k < params[i].diffuse_logit[f].size(); ++k)
          params[i].diffuse_logit[f][k] -=
              cfg.learning_rate * grads[i].diffuse_logit[f][k];
        for (size_t k = 0; k < params[i].residual_logit[f].size(); ++k)
          params[i].residual_logit[f][k] -=
              cfg.learning_rate * grads[i].residual_logit[f][k];
      }
    }
  }

  BatchForward final_fwd = batch_forward(scenes, params, cfg, select, nullptr);
  record(cfg.steps, final_fwd);

  std::vector<FitResult> results;
  for (size_t i = 0; i < scenes.size(); ++i)
    results.push_back(
        make_result(scenes[i], final_fwd.scenes[i], std::move(traces[i])));
  return results;
}

FitResult fit_depth(const FrameSet& frames, const FitConfig& cfg) {
  std::vector<FrameSet> one{frames};
  return std::move(fit_batch(one, cfg).front());
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

namespace {

enum class ParamKind { Depth, Diffuse, Residual };

struct Coord {
  int scene;
  ParamKind kind;
  int frame;
  size_t index;
};

struct Scenario {
  std::vector<FrameSet> frame_sets;
  std::vector<SceneData> scenes;
  std::vector<SceneParams> params;
  FitConfig cfg;
  LossSelect select;
  std::vector<StepMasks> frozen;
  std::vector<ParamKind> sample_kinds;
};

double& coord_ref(std::vector<SceneParams>& params, const Coord& c) {
  switch (c.kind) {
    case ParamKind::Depth:
      return params[c.scene].depth_logit[c.index];
    case ParamKind::Diffuse:
      return params[c.scene].diffuse_logit[c.frame][c.index];
    default:
      return params[c.scene].residual_logit[c.frame][c.index];
  }
}

double coord_grad(const std::vector<SceneGrad>& grads, const Coord& c) {
  switch (c.kind) {
    case ParamKind::Depth:
      return grads[c.scene].depth_logit[c.index];
    case ParamKind::Diffuse:
      return grads[c.scene].diffuse_logit[c.frame][c.index];
    default:
      return grads[c.scene].residual_logit[c.frame][c.index];
  }
}

FrameSet scenario_frame_set(double specular, std::uint64_t seed, int h, int w,
                            int n_src) {
  SceneSpec spec;
  spec.plane_depth = 1.5;
  spec.texture = TextureKind::CheckerNoise;
  spec.specular_strength = specular;
  spec.specular_sharpness = 20.0;
  spec.seed = seed;

  FrameSet fs;
  int n_views = n_src + 1;
  Camera ref = scene_camera(spec, 0, n_views, h, w);
  fs.ref_image = render_view(spec, ref, h, w).image;
  fs.ref_camera = ref;
  for (int s = 1; s < n_views; ++s) {
    Camera cam = scene_camera(spec, s, n_views, h, w);
    fs.src_images.push_back(render_view(spec, cam, h, w).image);
    fs.src_cameras.push_back(cam);
  }
  return fs;
}

Scenario build_scenario(const std::string& name, std::uint64_t seed) {
  Scenario sc;
  sc.cfg.min_fused_errors = true;
  sc.cfg.use_auto_mask = true;
  sc.cfg.use_reflection_mask = true;
  sc.cfg.use_contrastive = false;
  sc.select = {false, false, false, false, false};

  int h = 20, w = 16;
  int n_scenes = 1;
  if (name == "photometric_l1") {
    sc.cfg.alpha = 0.0;
    sc.cfg.use_auto_mask = false;
    sc.cfg.use_reflection_mask = false;
    sc.select.depth = true;
    sc.sample_kinds = {ParamKind::Depth};
  } else if (name == "photometric_ssim") {
    sc.cfg.alpha = 1.0;
    sc.cfg.use_auto_mask = false;
    sc.cfg.use_reflection_mask = false;
    sc.select.depth = true;
    sc.sample_kinds = {ParamKind::Depth};
  } else if (name == "masked_depth") {
    sc.select.depth = true;
    sc.sample_kinds = {ParamKind::Depth};
  } else if (name == "smoothness") {
    sc.select.smooth = true;
    sc.sample_kinds = {ParamKind::Depth};
  } else if (name == "recon") {
    sc.select.recon = true;
    sc.sample_kinds = {ParamKind::Diffuse, ParamKind::Residual};
  } else if (name == "cross") {
    sc.select.cross = true;
    sc.sample_kinds = {ParamKind::Diffuse, ParamKind::Residual};
  } else if (name == "cross_to_depth") {
    sc.select.cross = true;
    sc.cfg.cross_grads_to_depth = true;
    sc.sample_kinds = {ParamKind::Depth};
  } else if (name == "contrastive") {
    sc.select.contrastive = true;
    sc.cfg.use_contrastive = true;
    n_scenes = 2;
    sc.sample_kinds = {ParamKind::Diffuse};
  } else if (name == "total") {
    sc.select = {true, true, true, true, true};
    sc.cfg.use_contrastive = true;
    n_scenes = 2;
    sc.sample_kinds = {ParamKind::Depth, ParamKind::Diffuse,
                       ParamKind::Residual};
  } else {
    throw InvalidArgument("grad check: unknown loss name '" + name + "'");
  }

  Rng rng(seed * 977 + 13);
  for (int i = 0; i < n_scenes; ++i) {
    sc.frame_sets.push_back(
        scenario_frame_set(0.6, seed + 31 * i, h, w, 2));
  }
  for (auto& fs : sc.frame_sets) sc.scenes.push_back(make_scene_data(fs));

  for (const auto& sd : sc.scenes) {
    SceneParams p = init_params(sd, sc.cfg, rng);
    // Move the point of evaluation off the symmetric start so the gradient
    // signs are generic.
    for (auto& v : p.depth_logit) v += rng.uniform(-0.25, 0.25);
    for (auto& f : p.diffuse_logit)
      for (auto& v : f) v += rng.uniform(-0.2, 0.2);
    for (auto& f : p.residual_logit)
      for (auto& v : f) v += rng.uniform(-0.5, 0.5);
    sc.params.push_back(std::move(p));
  }

  // Masks are recomputed per training step but constant within one; freeze
  // them at the evaluation point so finite differences see the same
  // function the analytic gradient differentiates.
  BatchForward fwd =
      batch_forward(sc.scenes, sc.params, sc.cfg, sc.select, nullptr);
  for (const auto& sf : fwd.scenes) sc.frozen.push_back(sf.masks);
  return sc;
}

}  // namespace

const std::vector<std::string>& grad_check_names() {
  static const std::vector<std::string> names = {
      "recon",      "cross",          "contrastive",
      "photometric_l1", "photometric_ssim", "smoothness",
      "masked_depth",   "cross_to_depth",   "total"};
  return names;
}

GradCheckReport grad_check(const std::string& loss_name, double step,
                           int max_coords, std::uint64_t seed) {
  if (!(step > 0.0)) throw InvalidArgument("grad check: step must be positive");
  Scenario sc = build_scenario(loss_name, seed);

  auto eval = [&]() {
    return batch_forward(sc.scenes, sc.params, sc.cfg, sc.select, &sc.frozen)
        .total;
  };
  BatchForward fwd =
      batch_forward(sc.scenes, sc.params, sc.cfg, sc.select, &sc.frozen);
  std::vector<SceneGrad> grads =
      batch_backward(sc.scenes, sc.params, sc.cfg, sc.select, fwd);
  if (!std::isfinite(fwd.total))
    throw NonFiniteError("grad check: non-finite loss");

  Rng rng(seed + 4242);
  GradCheckReport report;
  for (int n = 0; n < max_coords; ++n) {
    Coord c;
    c.scene = rng.next_int(static_cast<int>(sc.scenes.size()));
    c.kind = sc.sample_kinds[rng.next_int(
        static_cast<int>(sc.sample_kinds.size()))];
    c.frame = rng.next_int(static_cast<int>(sc.scenes[c.scene].n_frames()));
    size_t dim;
    size_t n_px = static_cast<size_t>(sc.scenes[c.scene].h) *
                  sc.scenes[c.scene].w;
    dim = c.kind == ParamKind::Diffuse ? n_px * 3 : n_px;
    c.index = static_cast<size_t>(rng.next_int(static_cast<int>(dim)));

    double& slot = coord_ref(sc.params, c);
    double saved = slot;
    auto central = [&](double hh) {
      slot = saved + hh;
      double f1 = eval();
      slot = saved - hh;
      double f2 = eval();
      slot = saved;
      return (f1 - f2) / (2.0 * hh);
    };
    double fd = central(step);
    double fd_half = central(step / 2.0);

    // Kinks, clamp boundaries, argmin flips and cell crossings show up as
    // inconsistent finite differences across step sizes.
    double consistency = std::abs(fd - fd_half) /
                         std::max(1e-6, std::abs(fd) + std::abs(fd_half));
    if (consistency > 1e-3) {
      ++report.skipped;
      continue;
    }
    double analytic = coord_grad(grads, c);
    if (!std::isfinite(analytic))
      throw NonFiniteError("grad check: non-finite analytic gradient");
    double rel = std::abs(analytic - fd) /
                 std::max(1e-6, std::abs(analytic) + std::abs(fd));
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.checked;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Config JSON.

FitConfig load_fit_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("fit config: cannot open " + path);
  nlohmann::json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fit config: bad JSON: ") + e.what());
  }

  FitConfig cfg;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) {
      j.at(key).get_to(out);
      j.erase(key);
    }
  };
  get("steps", cfg.steps);
  get("learning_rate", cfg.learning_rate);
  get("use_reflection_mask", cfg.use_reflection_mask);
  get("use_auto_mask", cfg.use_auto_mask);
  get("use_contrastive", cfg.use_contrastive);
  get("cross_grads_to_depth", cfg.cross_grads_to_depth);
  get("min_fused_errors", cfg.min_fused_errors);
  get("contrastive_raw_norm", cfg.contrastive_raw_norm);
  get("alpha", cfg.alpha);
  get("lambda_recon", cfg.weights.recon);
  get("lambda_cross", cfg.weights.cross);
  get("lambda_cts", cfg.weights.contrastive);
  get("delta_cts", cfg.weights.margin);
  get("smoothness_weight", cfg.smoothness_weight);
  get("min_depth", cfg.min_depth);
  get("max_depth", cfg.max_depth);
  get("mask_margin", cfg.mask_margin);
  get("init_depth", cfg.init_depth);
  get("seed", cfg.seed);
  if (!j.empty())
    throw FormatError("fit config: unknown key '" + j.begin().key() + "'");
  cfg.validate();
  return cfg;
}

std::string fit_config_to_json(const FitConfig& cfg) {
  nlohmann::ordered_json j;
  j["steps"] = cfg.steps;
  j["learning_rate"] = cfg.learning_rate;
  j["use_reflection_mask"] = cfg.use_reflection_mask;
  j["use_auto_mask"] = cfg.use_auto_mask;
  j["use_contrastive"] = cfg.use_contrastive;
  j["cross_grads_to_depth"] = cfg.cross_grads_to_depth;
  j["min_fused_errors"] = cfg.min_fused_errors;
  j["contrastive_raw_norm"] = cfg.contrastive_raw_norm;
  j["alpha"] = cfg.alpha;
  j["lambda_recon"] = cfg.weights.recon;
  j["lambda_cross"] = cfg.weights.cross;
  j["lambda_cts"] = cfg.weights.contrastive;
  j["delta_cts"] = cfg.weights.margin;
  j["smoothness_weight"] = cfg.smoothness_weight;
  j["min_depth"] = cfg.min_depth;
  j["max_depth"] = cfg.max_depth;
  j["mask_margin"] = cfg.mask_margin;
  j["init_depth"] = cfg.init_depth;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

}  // namespace reflectdepth
