#include "reflectdepth.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "reflectdepth/distill.hpp"
#include "reflectdepth/io.hpp"
#include "reflectdepth/manifest.hpp"
#include "reflectdepth/metrics.hpp"
#include "reflectdepth/pipeline.hpp"
#include "reflectdepth/synthetic.hpp"
#include "reflectdepth/trainer.hpp"

using namespace reflectdepth;

struct rd_image {
  ImageBuffer value;
};
struct rd_depth {
  DepthMap value;
};
struct rd_mask {
  BinaryMask value;
};
struct rd_sequence {
  LoadedSequence value;
};
struct rd_fit_result {
  FitResult value;
};
struct rd_manifest_builder {
  SequenceManifest value;
  bool has_reference = false;
};

namespace {

thread_local std::string g_last_error;

rd_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return RD_ERR_IO;
    case ErrorCode::Format: return RD_ERR_FORMAT;
    case ErrorCode::DimensionMismatch: return RD_ERR_DIMENSION;
    case ErrorCode::InvalidArgument: return RD_ERR_INVALID_ARGUMENT;
    case ErrorCode::EmptyInput: return RD_ERR_EMPTY_INPUT;
    case ErrorCode::EmptyValidSet: return RD_ERR_EMPTY_VALID_SET;
    case ErrorCode::NonFinite: return RD_ERR_NON_FINITE;
    case ErrorCode::NonPositiveValue: return RD_ERR_NON_POSITIVE;
    case ErrorCode::OutOfRange: return RD_ERR_OUT_OF_RANGE;
    case ErrorCode::NoValidPixels: return RD_ERR_NO_VALID_PIXELS;
    case ErrorCode::Divergence: return RD_ERR_DIVERGENCE;
    case ErrorCode::NoIntersection: return RD_ERR_NO_INTERSECTION;
  }
  return RD_ERR_UNKNOWN;
}

template <typename Fn>
rd_status guarded(Fn&& fn) {
  try {
    fn();
    return RD_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RD_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return RD_ERR_UNKNOWN;
  }
}

rd_status invalid(const char* msg) {
  g_last_error = msg;
  return RD_ERR_INVALID_ARGUMENT;
}

Camera to_camera(const rd_camera& c) {
  Camera cam;
  cam.intrinsics = Intrinsics{c.fx, c.fy, c.cx, c.cy};
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col)
      cam.pose.rotation(r, col) = c.pose[4 * r + col];
  cam.pose.translation = {c.pose[3], c.pose[7], c.pose[11]};
  cam.validate();
  return cam;
}

rd_camera from_camera(const Camera& cam) {
  rd_camera c;
  c.fx = cam.intrinsics.fx;
  c.fy = cam.intrinsics.fy;
  c.cx = cam.intrinsics.cx;
  c.cy = cam.intrinsics.cy;
  for (int i = 0; i < 16; ++i) c.pose[i] = 0.0;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) c.pose[4 * r + col] = cam.pose.rotation(r, col);
  c.pose[3] = cam.pose.translation.x;
  c.pose[7] = cam.pose.translation.y;
  c.pose[11] = cam.pose.translation.z;
  c.pose[15] = 1.0;
  return c;
}

SceneSpec to_scene_spec(const rd_scene_spec& s) {
  SceneSpec spec;
  spec.plane_depth = s.plane_depth;
  spec.relief_amplitude = s.relief_amplitude;
  spec.relief_frequency = s.relief_frequency;
  spec.texture = s.texture == 0 ? TextureKind::Checker
                 : s.texture == 1 ? TextureKind::Noise
                                  : TextureKind::CheckerNoise;
  spec.texture_scale = s.texture_scale;
  spec.light_dir = {s.light_dir[0], s.light_dir[1], s.light_dir[2]};
  spec.specular_strength = s.specular_strength;
  spec.specular_sharpness = s.specular_sharpness;
  spec.seed = s.seed;
  return spec;
}

FitConfig to_fit_config(const rd_fit_config& c) {
  FitConfig cfg;
  cfg.steps = c.steps;
  cfg.learning_rate = c.learning_rate;
  cfg.use_reflection_mask = c.use_reflection_mask != 0;
  cfg.use_auto_mask = c.use_auto_mask != 0;
  cfg.use_contrastive = c.use_contrastive != 0;
  cfg.cross_grads_to_depth = c.cross_grads_to_depth != 0;
  cfg.min_fused_errors = c.min_fused_errors != 0;
  cfg.contrastive_raw_norm = c.contrastive_raw_norm != 0;
  cfg.alpha = c.alpha;
  cfg.weights = {c.lambda_recon, c.lambda_cross, c.lambda_cts, c.delta_cts};
  cfg.smoothness_weight = c.smoothness_weight;
  cfg.min_depth = c.min_depth;
  cfg.max_depth = c.max_depth;
  cfg.mask_margin = c.mask_margin;
  cfg.init_depth = c.init_depth;
  cfg.seed = c.seed;
  return cfg;
}

rd_fit_config from_fit_config(const FitConfig& cfg) {
  rd_fit_config c;
  c.steps = cfg.steps;
  c.learning_rate = cfg.learning_rate;
  c.use_reflection_mask = cfg.use_reflection_mask;
  c.use_auto_mask = cfg.use_auto_mask;
  c.use_contrastive = cfg.use_contrastive;
  c.cross_grads_to_depth = cfg.cross_grads_to_depth;
  c.min_fused_errors = cfg.min_fused_errors;
  c.contrastive_raw_norm = cfg.contrastive_raw_norm;
  c.alpha = cfg.alpha;
  c.lambda_recon = cfg.weights.recon;
  c.lambda_cross = cfg.weights.cross;
  c.lambda_cts = cfg.weights.contrastive;
  c.delta_cts = cfg.weights.margin;
  c.smoothness_weight = cfg.smoothness_weight;
  c.min_depth = cfg.min_depth;
  c.max_depth = cfg.max_depth;
  c.mask_margin = cfg.mask_margin;
  c.init_depth = cfg.init_depth;
  c.seed = cfg.seed;
  return c;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const LoadedFrame& frame_at(const LoadedSequence& seq, int frame) {
  if (frame == 0) return seq.reference;
  return seq.sources.at(static_cast<size_t>(frame) - 1);
}

nlohmann::ordered_json z_histogram(const std::vector<double>& z,
                                   const BinaryMask& valid) {
  constexpr int kBins = 20;
  constexpr double kBinWidth = 0.4;  // covers z in [0, 8); overflow clamps
  std::vector<std::int64_t> counts(kBins, 0);
  for (size_t i = 0; i < z.size(); ++i) {
    if (!valid.values[i]) continue;
    int bin = static_cast<int>(z[i] / kBinWidth);
    if (bin < 0) bin = 0;
    if (bin >= kBins) bin = kBins - 1;
    ++counts[bin];
  }
  std::vector<double> edges(kBins + 1);
  for (int i = 0; i <= kBins; ++i) edges[i] = i * kBinWidth;
  nlohmann::ordered_json j;
  j["bin_edges"] = edges;
  j["counts"] = counts;
  return j;
}

}  // namespace

extern "C" {

const char* rd_last_error(void) { return g_last_error.c_str(); }

void rd_string_free(char* s) { delete[] s; }

/* ---- images ---- */

rd_status rd_image_create(int height, int width, int channels,
                          const double* data, rd_image** out) {
  if (!data || !out) return invalid("rd_image_create: null argument");
  return guarded([&] {
    std::vector<double> values(data, data + static_cast<size_t>(height) * width *
                                                channels);
    *out = new rd_image{ImageBuffer(height, width, channels, Domain::Linear,
                                    std::move(values))};
  });
}

rd_status rd_image_load_png(const char* path, rd_image** out) {
  if (!path || !out) return invalid("rd_image_load_png: null argument");
  return guarded([&] { *out = new rd_image{load_png(path)}; });
}

rd_status rd_image_save_png(const rd_image* img, const char* path) {
  if (!img || !path) return invalid("rd_image_save_png: null argument");
  return guarded([&] { save_png(img->value, path); });
}

rd_status rd_image_load_pfm(const char* path, rd_image** out) {
  if (!path || !out) return invalid("rd_image_load_pfm: null argument");
  return guarded([&] { *out = new rd_image{load_pfm(path)}; });
}

rd_status rd_image_save_pfm(const rd_image* img, const char* path) {
  if (!img || !path) return invalid("rd_image_save_pfm: null argument");
  return guarded([&] { save_pfm(img->value, path); });
}

int rd_image_height(const rd_image* img) { return img ? img->value.height : 0; }
int rd_image_width(const rd_image* img) { return img ? img->value.width : 0; }
int rd_image_channels(const rd_image* img) {
  return img ? img->value.channels : 0;
}
const double* rd_image_data(const rd_image* img) {
  return img ? img->value.data.data() : nullptr;
}
void rd_image_free(rd_image* img) { delete img; }

/* ---- depth ---- */

rd_status rd_depth_create(int height, int width, const double* data,
                          rd_depth** out) {
  if (!data || !out) return invalid("rd_depth_create: null argument");
  return guarded([&] {
    std::vector<double> values(data, data + static_cast<size_t>(height) * width);
    *out = new rd_depth{DepthMap(height, width, std::move(values))};
  });
}

rd_status rd_depth_load_pfm(const char* path, rd_depth** out) {
  if (!path || !out) return invalid("rd_depth_load_pfm: null argument");
  return guarded([&] { *out = new rd_depth{load_depth_pfm(path)}; });
}

rd_status rd_depth_save_pfm(const rd_depth* depth, const char* path) {
  if (!depth || !path) return invalid("rd_depth_save_pfm: null argument");
  return guarded([&] { save_depth_pfm(depth->value, path); });
}

int rd_depth_height(const rd_depth* depth) {
  return depth ? depth->value.height : 0;
}
int rd_depth_width(const rd_depth* depth) {
  return depth ? depth->value.width : 0;
}
const double* rd_depth_data(const rd_depth* depth) {
  return depth ? depth->value.values.data() : nullptr;
}
void rd_depth_free(rd_depth* depth) { delete depth; }

/* ---- masks ---- */

rd_status rd_mask_create(int height, int width, const uint8_t* data,
                         rd_mask** out) {
  if (!data || !out) return invalid("rd_mask_create: null argument");
  return guarded([&] {
    std::vector<std::uint8_t> values(data,
                                     data + static_cast<size_t>(height) * width);
    *out = new rd_mask{BinaryMask(height, width, std::move(values))};
  });
}

rd_status rd_mask_load_png(const char* path, rd_mask** out) {
  if (!path || !out) return invalid("rd_mask_load_png: null argument");
  return guarded([&] { *out = new rd_mask{load_mask_png(path)}; });
}

rd_status rd_mask_save_png(const rd_mask* mask, const char* path) {
  if (!mask || !path) return invalid("rd_mask_save_png: null argument");
  return guarded([&] { save_mask_png(mask->value, path); });
}

int rd_mask_height(const rd_mask* mask) { return mask ? mask->value.height : 0; }
int rd_mask_width(const rd_mask* mask) { return mask ? mask->value.width : 0; }
const uint8_t* rd_mask_data(const rd_mask* mask) {
  return mask ? mask->value.values.data() : nullptr;
}
void rd_mask_free(rd_mask* mask) { delete mask; }

/* ---- sequences ---- */

rd_status rd_sequence_load(const char* manifest_path, rd_sequence** out) {
  if (!manifest_path || !out) return invalid("rd_sequence_load: null argument");
  return guarded([&] { *out = new rd_sequence{load_sequence(manifest_path)}; });
}

int rd_sequence_source_count(const rd_sequence* seq) {
  return seq ? static_cast<int>(seq->value.sources.size()) : 0;
}

rd_status rd_sequence_image(const rd_sequence* seq, int frame, rd_image** out) {
  if (!seq || !out) return invalid("rd_sequence_image: null argument");
  return guarded([&] { *out = new rd_image{frame_at(seq->value, frame).image}; });
}

rd_status rd_sequence_camera(const rd_sequence* seq, int frame, rd_camera* out) {
  if (!seq || !out) return invalid("rd_sequence_camera: null argument");
  return guarded([&] { *out = from_camera(frame_at(seq->value, frame).camera); });
}

rd_status rd_sequence_gt_depth(const rd_sequence* seq, rd_depth** out) {
  if (!seq || !out) return invalid("rd_sequence_gt_depth: null argument");
  return guarded([&] {
    if (!seq->value.gt_depth)
      throw EmptyInput("sequence: manifest has no gt_depth");
    *out = new rd_depth{*seq->value.gt_depth};
  });
}

rd_status rd_sequence_gt_mask(const rd_sequence* seq, rd_mask** out) {
  if (!seq || !out) return invalid("rd_sequence_gt_mask: null argument");
  return guarded([&] {
    if (!seq->value.gt_mask) throw EmptyInput("sequence: manifest has no gt_mask");
    *out = new rd_mask{*seq->value.gt_mask};
  });
}

rd_status rd_sequence_residual(const rd_sequence* seq, int frame,
                               rd_image** out) {
  if (!seq || !out) return invalid("rd_sequence_residual: null argument");
  return guarded([&] {
    const LoadedFrame& f = frame_at(seq->value, frame);
    if (!f.residual) throw EmptyInput("sequence: frame has no residual raster");
    *out = new rd_image{*f.residual};
  });
}

void rd_sequence_free(rd_sequence* seq) { delete seq; }

/* ---- manifest builder ---- */

rd_manifest_builder* rd_manifest_builder_new(void) {
  return new rd_manifest_builder{};
}

rd_status rd_manifest_set_reference(rd_manifest_builder* b, const char* image,
                                    const rd_camera* camera,
                                    const char* residual_or_null) {
  if (!b || !image || !camera)
    return invalid("rd_manifest_set_reference: null argument");
  return guarded([&] {
    b->value.reference.image_path = image;
    b->value.reference.camera = to_camera(*camera);
    if (residual_or_null) b->value.reference.residual_path = residual_or_null;
    b->has_reference = true;
  });
}

rd_status rd_manifest_add_source(rd_manifest_builder* b, const char* image,
                                 const rd_camera* camera,
                                 const char* residual_or_null) {
  if (!b || !image || !camera)
    return invalid("rd_manifest_add_source: null argument");
  return guarded([&] {
    FrameRecord f;
    f.image_path = image;
    f.camera = to_camera(*camera);
    if (residual_or_null) f.residual_path = residual_or_null;
    b->value.sources.push_back(std::move(f));
  });
}

rd_status rd_manifest_set_gt(rd_manifest_builder* b, const char* gt_depth_or_null,
                             const char* gt_mask_or_null) {
  if (!b) return invalid("rd_manifest_set_gt: null argument");
  return guarded([&] {
    if (gt_depth_or_null) b->value.gt_depth_path = gt_depth_or_null;
    if (gt_mask_or_null) b->value.gt_mask_path = gt_mask_or_null;
  });
}

rd_status rd_manifest_save(const rd_manifest_builder* b, const char* path) {
  if (!b || !path) return invalid("rd_manifest_save: null argument");
  return guarded([&] {
    if (!b->has_reference)
      throw InvalidArgument("manifest builder: reference frame not set");
    save_manifest(b->value, path);
  });
}

void rd_manifest_builder_free(rd_manifest_builder* b) { delete b; }

/* ---- synthetic scenes ---- */

void rd_scene_spec_default(rd_scene_spec* spec) {
  if (!spec) return;
  SceneSpec d;
  spec->plane_depth = d.plane_depth;
  spec->relief_amplitude = d.relief_amplitude;
  spec->relief_frequency = d.relief_frequency;
  spec->texture = 2;
  spec->texture_scale = d.texture_scale;
  spec->light_dir[0] = d.light_dir.x;
  spec->light_dir[1] = d.light_dir.y;
  spec->light_dir[2] = d.light_dir.z;
  spec->specular_strength = d.specular_strength;
  spec->specular_sharpness = d.specular_sharpness;
  spec->seed = d.seed;
}

rd_status rd_scene_camera(const rd_scene_spec* spec, int view_index, int n_views,
                          int height, int width, rd_camera* out) {
  if (!spec || !out) return invalid("rd_scene_camera: null argument");
  return guarded([&] {
    *out = from_camera(
        scene_camera(to_scene_spec(*spec), view_index, n_views, height, width));
  });
}

rd_status rd_render_view(const rd_scene_spec* spec, const rd_camera* camera,
                         int height, int width, rd_image** image,
                         rd_depth** gt_depth, rd_image** gt_diffuse,
                         rd_image** gt_residual, rd_mask** gt_specular_mask) {
  if (!spec || !camera) return invalid("rd_render_view: null argument");
  return guarded([&] {
    RenderedView view =
        render_view(to_scene_spec(*spec), to_camera(*camera), height, width);
    if (image) *image = new rd_image{std::move(view.image)};
    if (gt_depth) *gt_depth = new rd_depth{std::move(view.gt_depth)};
    if (gt_diffuse) *gt_diffuse = new rd_image{std::move(view.gt_diffuse)};
    if (gt_residual) *gt_residual = new rd_image{std::move(view.gt_residual)};
    if (gt_specular_mask)
      *gt_specular_mask = new rd_mask{std::move(view.gt_specular_mask)};
  });
}

/* ---- geometry ---- */

rd_status rd_warp(const rd_image* src, const rd_depth* ref_depth,
                  const rd_camera* ref_camera, const rd_camera* src_camera,
                  rd_image** warped, rd_mask** valid) {
  if (!src || !ref_depth || !ref_camera || !src_camera)
    return invalid("rd_warp: null argument");
  return guarded([&] {
    Camera ref = to_camera(*ref_camera);
    Camera source = to_camera(*src_camera);
    WarpResult result = warp(src->value, ref_depth->value, ref.intrinsics,
                             relative_transform(ref, source));
    if (warped) *warped = new rd_image{std::move(result.image)};
    if (valid) *valid = new rd_mask{std::move(result.valid)};
  });
}

/* ---- reflection pipeline ---- */

rd_status rd_reflection_pipeline(const rd_sequence* seq, const rd_depth* depth,
                                 const rd_image* ref_residual, double alpha,
                                 double margin, int min_fused,
                                 rd_image** image_error, rd_image** diffuse_error,
                                 rd_mask** reflection, rd_mask** auto_mask,
                                 char** stats_json) {
  if (!seq || !depth) return invalid("rd_reflection_pipeline: null argument");
  return guarded([&] {
    FrameSet frames = to_frame_set(seq->value);
    std::vector<std::optional<ImageBuffer>> residuals;
    residuals.push_back(ref_residual ? std::optional(ref_residual->value)
                                     : seq->value.reference.residual);
    for (const auto& s : seq->value.sources) residuals.push_back(s.residual);

    ReflectionPipelineResult result = reflection_pipeline(
        frames, depth->value, residuals, alpha, margin, min_fused != 0);

    if (stats_json) {
      nlohmann::ordered_json j;
      j["masked_fraction"] = result.masked_fraction;
      j["valid_pixels"] = result.image_error.valid.count(1);
      j["degenerate_image_stats"] = result.z_image.stats.degenerate;
      j["degenerate_diffuse_stats"] = result.z_diffuse.stats.degenerate;
      j["z_image_histogram"] =
          z_histogram(result.z_image.z, result.image_error.valid);
      j["z_diffuse_histogram"] =
          z_histogram(result.z_diffuse.z, result.diffuse_error.valid);
      *stats_json = dup_string(j.dump(2) + "\n");
    }
    if (image_error) {
      int h = result.image_error.height, w = result.image_error.width;
      *image_error = new rd_image{ImageBuffer(
          h, w, 1, Domain::Linear, std::move(result.image_error.values))};
    }
    if (diffuse_error) {
      int h = result.diffuse_error.height, w = result.diffuse_error.width;
      *diffuse_error = new rd_image{ImageBuffer(
          h, w, 1, Domain::Linear, std::move(result.diffuse_error.values))};
    }
    if (reflection) *reflection = new rd_mask{std::move(result.reflection)};
    if (auto_mask) *auto_mask = new rd_mask{std::move(result.auto_mask)};
  });
}

/* ---- fitting ---- */

void rd_fit_config_default(rd_fit_config* cfg) {
  if (cfg) *cfg = from_fit_config(FitConfig{});
}

rd_status rd_fit_config_load(const char* path, rd_fit_config* cfg) {
  if (!path || !cfg) return invalid("rd_fit_config_load: null argument");
  return guarded([&] { *cfg = from_fit_config(load_fit_config(path)); });
}

rd_status rd_fit(const rd_sequence* seq, const rd_fit_config* cfg,
                 rd_fit_result** out) {
  if (!seq || !cfg || !out) return invalid("rd_fit: null argument");
  return guarded([&] {
    *out = new rd_fit_result{
        fit_depth(to_frame_set(seq->value), to_fit_config(*cfg))};
  });
}

rd_status rd_fit_result_depth(const rd_fit_result* r, rd_depth** out) {
  if (!r || !out) return invalid("rd_fit_result_depth: null argument");
  return guarded([&] { *out = new rd_depth{r->value.depth}; });
}

rd_status rd_fit_result_residual(const rd_fit_result* r, rd_image** out) {
  if (!r || !out) return invalid("rd_fit_result_residual: null argument");
  return guarded([&] { *out = new rd_image{r->value.residual.to_linear()}; });
}

rd_status rd_fit_result_mask(const rd_fit_result* r, rd_mask** out) {
  if (!r || !out) return invalid("rd_fit_result_mask: null argument");
  return guarded([&] { *out = new rd_mask{r->value.reflection}; });
}

rd_status rd_fit_result_trace_csv(const rd_fit_result* r, char** csv) {
  if (!r || !csv) return invalid("rd_fit_result_trace_csv: null argument");
  return guarded([&] { *csv = dup_string(trace_to_csv(r->value.trace)); });
}

void rd_fit_result_free(rd_fit_result* r) { delete r; }

/* ---- distillation ---- */

rd_status rd_fuse_pseudo_depth(const rd_depth* depth_org,
                               const rd_depth* depth_refl,
                               const rd_mask* reflection, rd_depth** out) {
  if (!depth_org || !depth_refl || !reflection || !out)
    return invalid("rd_fuse_pseudo_depth: null argument");
  return guarded([&] {
    *out = new rd_depth{fuse_pseudo_depth(depth_org->value, depth_refl->value,
                                          reflection->value)};
  });
}

/* ---- evaluation ---- */

rd_status rd_depth_metrics(const rd_depth* pred, const rd_depth* gt,
                           double d_min, double d_max,
                           rd_depth_metrics_result* out) {
  if (!pred || !gt || !out) return invalid("rd_depth_metrics: null argument");
  return guarded([&] {
    DepthMetrics m = depth_metrics(pred->value, gt->value, d_min, d_max);
    *out = {m.abs_rel, m.sq_rel, m.rmse, m.rmse_log,
            m.a1,      m.a2,     m.a3,   m.valid_pixels};
  });
}

rd_status rd_mask_iou(const rd_mask* pred, const rd_mask* gt, int positive_class,
                      double* iou) {
  if (!pred || !gt || !iou) return invalid("rd_mask_iou: null argument");
  if (positive_class != 0 && positive_class != 1)
    return invalid("rd_mask_iou: positive_class must be 0 or 1");
  return guarded([&] {
    *iou = mask_iou(pred->value, gt->value,
                    static_cast<std::uint8_t>(positive_class));
  });
}

/* ---- gradient checks ---- */

int rd_grad_check_count(void) {
  return static_cast<int>(grad_check_names().size());
}

const char* rd_grad_check_name(int index) {
  const auto& names = grad_check_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<size_t>(index)].c_str();
}

rd_status rd_grad_check(const char* loss_name, double step, int max_coords,
                        uint64_t seed, double* max_rel_error, int* checked,
                        int* skipped) {
  if (!loss_name) return invalid("rd_grad_check: null loss name");
  return guarded([&] {
    GradCheckReport report = grad_check(loss_name, step, max_coords, seed);
    if (max_rel_error) *max_rel_error = report.max_rel_error;
    if (checked) *checked = report.checked;
    if (skipped) *skipped = report.skipped;
  });
}

} /* extern "C" */
