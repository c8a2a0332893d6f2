/* C interface to the reflectdepth library.
 *
 * All objects are opaque handles created and destroyed through these
 * functions. Calls return RD_OK on success; on failure they return a status
 * code and leave a message retrievable with rd_last_error() (thread-local).
 * Output parameters are untouched on failure. Any handle output pointer may
 * be NULL when the caller does not need that artifact.
 */
#ifndef REFLECTDEPTH_H
#define REFLECTDEPTH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rd_status {
  RD_OK = 0,
  RD_ERR_IO = 1,
  RD_ERR_FORMAT = 2,
  RD_ERR_DIMENSION = 3,
  RD_ERR_INVALID_ARGUMENT = 4,
  RD_ERR_EMPTY_INPUT = 5,
  RD_ERR_EMPTY_VALID_SET = 6,
  RD_ERR_NON_FINITE = 7,
  RD_ERR_NON_POSITIVE = 8,
  RD_ERR_OUT_OF_RANGE = 9,
  RD_ERR_NO_VALID_PIXELS = 10,
  RD_ERR_DIVERGENCE = 11,
  RD_ERR_NO_INTERSECTION = 12,
  RD_ERR_UNKNOWN = 13
} rd_status;

const char* rd_last_error(void);

/* Frees strings returned through char** outputs. */
void rd_string_free(char* s);

typedef struct rd_image rd_image;       /* H x W x {1,3} doubles in [0,1] */
typedef struct rd_depth rd_depth;       /* H x W doubles, meters */
typedef struct rd_mask rd_mask;         /* H x W bytes, 0 or 1 */
typedef struct rd_sequence rd_sequence; /* loaded manifest */
typedef struct rd_fit_result rd_fit_result;
typedef struct rd_manifest_builder rd_manifest_builder;

/* Zero-skew pinhole camera; pose is the world-from-camera 4x4, row-major. */
typedef struct rd_camera {
  double fx, fy, cx, cy;
  double pose[16];
} rd_camera;

/* ---- images ---- */
rd_status rd_image_create(int height, int width, int channels,
                          const double* data, rd_image** out);
rd_status rd_image_load_png(const char* path, rd_image** out);
rd_status rd_image_save_png(const rd_image* img, const char* path);
rd_status rd_image_load_pfm(const char* path, rd_image** out);
rd_status rd_image_save_pfm(const rd_image* img, const char* path);
int rd_image_height(const rd_image* img);
int rd_image_width(const rd_image* img);
int rd_image_channels(const rd_image* img);
const double* rd_image_data(const rd_image* img);
void rd_image_free(rd_image* img);

/* ---- depth maps ---- */
rd_status rd_depth_create(int height, int width, const double* data,
                          rd_depth** out);
rd_status rd_depth_load_pfm(const char* path, rd_depth** out);
rd_status rd_depth_save_pfm(const rd_depth* depth, const char* path);
int rd_depth_height(const rd_depth* depth);
int rd_depth_width(const rd_depth* depth);
const double* rd_depth_data(const rd_depth* depth);
void rd_depth_free(rd_depth* depth);

/* ---- binary masks (stored as 0/255 gray PNGs) ---- */
rd_status rd_mask_create(int height, int width, const uint8_t* data,
                         rd_mask** out);
rd_status rd_mask_load_png(const char* path, rd_mask** out);
rd_status rd_mask_save_png(const rd_mask* mask, const char* path);
int rd_mask_height(const rd_mask* mask);
int rd_mask_width(const rd_mask* mask);
const uint8_t* rd_mask_data(const rd_mask* mask);
void rd_mask_free(rd_mask* mask);

/* ---- sequence manifests ---- */
rd_status rd_sequence_load(const char* manifest_path, rd_sequence** out);
int rd_sequence_source_count(const rd_sequence* seq);
/* frame 0 is the reference, 1..count the sources */
rd_status rd_sequence_image(const rd_sequence* seq, int frame, rd_image** out);
rd_status rd_sequence_camera(const rd_sequence* seq, int frame, rd_camera* out);
/* RD_ERR_EMPTY_INPUT when the manifest carries no such raster */
rd_status rd_sequence_gt_depth(const rd_sequence* seq, rd_depth** out);
rd_status rd_sequence_gt_mask(const rd_sequence* seq, rd_mask** out);
rd_status rd_sequence_residual(const rd_sequence* seq, int frame,
                               rd_image** out);
void rd_sequence_free(rd_sequence* seq);

rd_manifest_builder* rd_manifest_builder_new(void);
rd_status rd_manifest_set_reference(rd_manifest_builder* b, const char* image,
                                    const rd_camera* camera,
                                    const char* residual_or_null);
rd_status rd_manifest_add_source(rd_manifest_builder* b, const char* image,
                                 const rd_camera* camera,
                                 const char* residual_or_null);
rd_status rd_manifest_set_gt(rd_manifest_builder* b,
                             const char* gt_depth_or_null,
                             const char* gt_mask_or_null);
rd_status rd_manifest_save(const rd_manifest_builder* b, const char* path);
void rd_manifest_builder_free(rd_manifest_builder* b);

/* ---- synthetic oracle scenes ---- */
typedef struct rd_scene_spec {
  double plane_depth;
  double relief_amplitude;
  double relief_frequency;
  int texture; /* 0 checker, 1 noise, 2 checker+noise */
  double texture_scale;
  double light_dir[3];
  double specular_strength;
  double specular_sharpness;
  uint64_t seed;
} rd_scene_spec;

void rd_scene_spec_default(rd_scene_spec* spec);
rd_status rd_scene_camera(const rd_scene_spec* spec, int view_index,
                          int n_views, int height, int width, rd_camera* out);
rd_status rd_render_view(const rd_scene_spec* spec, const rd_camera* camera,
                         int height, int width, rd_image** image,
                         rd_depth** gt_depth, rd_image** gt_diffuse,
                         rd_image** gt_residual, rd_mask** gt_specular_mask);

/* ---- geometry ---- */
rd_status rd_warp(const rd_image* src, const rd_depth* ref_depth,
                  const rd_camera* ref_camera, const rd_camera* src_camera,
                  rd_image** warped, rd_mask** valid);

/* ---- reflection masking pipeline ----
 * ref_residual overrides the manifest's reference residual when non-NULL;
 * source residuals come from the manifest (absent means residual = 1).
 * stats_json reports the masked fraction and z histograms.
 */
rd_status rd_reflection_pipeline(const rd_sequence* seq, const rd_depth* depth,
                                 const rd_image* ref_residual, double alpha,
                                 double margin, int min_fused,
                                 rd_image** image_error,
                                 rd_image** diffuse_error, rd_mask** reflection,
                                 rd_mask** auto_mask, char** stats_json);

/* ---- depth fitting ---- */
typedef struct rd_fit_config {
  int steps;
  double learning_rate;
  int use_reflection_mask;
  int use_auto_mask;
  int use_contrastive;
  int cross_grads_to_depth;
  int min_fused_errors;
  int contrastive_raw_norm;
  double alpha;
  double lambda_recon;
  double lambda_cross;
  double lambda_cts;
  double delta_cts;
  double smoothness_weight;
  double min_depth;
  double max_depth;
  double mask_margin;
  double init_depth;
  uint64_t seed;
} rd_fit_config;

void rd_fit_config_default(rd_fit_config* cfg);
rd_status rd_fit_config_load(const char* path, rd_fit_config* cfg);
rd_status rd_fit(const rd_sequence* seq, const rd_fit_config* cfg,
                 rd_fit_result** out);
rd_status rd_fit_result_depth(const rd_fit_result* r, rd_depth** out);
rd_status rd_fit_result_residual(const rd_fit_result* r, rd_image** out);
rd_status rd_fit_result_mask(const rd_fit_result* r, rd_mask** out);
rd_status rd_fit_result_trace_csv(const rd_fit_result* r, char** csv);
void rd_fit_result_free(rd_fit_result* r);

/* ---- distillation ---- */
rd_status rd_fuse_pseudo_depth(const rd_depth* depth_org,
                               const rd_depth* depth_refl,
                               const rd_mask* reflection, rd_depth** out);

/* ---- evaluation ---- */
typedef struct rd_depth_metrics_result {
  double abs_rel, sq_rel, rmse, rmse_log, a1, a2, a3;
  int64_t valid_pixels;
} rd_depth_metrics_result;

rd_status rd_depth_metrics(const rd_depth* pred, const rd_depth* gt,
                           double d_min, double d_max,
                           rd_depth_metrics_result* out);
rd_status rd_mask_iou(const rd_mask* pred, const rd_mask* gt,
                      int positive_class, double* iou);

/* ---- gradient checks ---- */
int rd_grad_check_count(void);
const char* rd_grad_check_name(int index);
rd_status rd_grad_check(const char* loss_name, double step, int max_coords,
                        uint64_t seed, double* max_rel_error, int* checked,
                        int* skipped);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* REFLECTDEPTH_H */
