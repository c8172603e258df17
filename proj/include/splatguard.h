/* Copyright Contributors to the splatguard project
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of the splatguard library. Every function returns an sg_status; on failure
 * sg_last_error() describes the error of the calling thread. Objects are opaque handles
 * released with the matching *_free function. Operations are file oriented: scenes, keys,
 * PPM images and CSV tables move through paths so that steps compose on disk.
 */
#ifndef SPLATGUARD_H
#define SPLATGUARD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SG_API __declspec(dllexport)
#elif defined(__GNUC__)
#define SG_API __attribute__((visibility("default")))
#else
#define SG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sg_status {
    SG_OK                   = 0,
    SG_ERR_INVALID_ARGUMENT = 1,
    SG_ERR_SHAPE_MISMATCH   = 2,
    SG_ERR_IO               = 3,
    SG_ERR_FORMAT           = 4,
    SG_ERR_CONFIG           = 5,
    SG_ERR_NUMERIC          = 6,
    SG_ERR_EMPTY_SCENE      = 7,
    SG_ERR_INVALID_ROTATION = 8,
    SG_ERR_VERSION_MISMATCH = 9,
    SG_ERR_TRUNCATED        = 10,
    SG_ERR_INTERNAL         = 99
} sg_status;

typedef struct sg_config sg_config;
typedef struct sg_scene sg_scene;

typedef struct sg_protect_summary {
    double bit_accuracy; /* mean over evaluation views */
    double psnr;         /* mean over evaluation views, against the input scene */
    int iterations;
    double wall_seconds;
} sg_protect_summary;

/* Message of the last failed call on this thread; empty after a success. */
SG_API const char *sg_last_error(void);
SG_API const char *sg_status_name(sg_status status);
SG_API const char *sg_version(void);

/* Parallelism of subsequent calls. Results do not depend on it. */
SG_API sg_status sg_set_workers(int workers);

/* ---- configuration ---- */
SG_API sg_status sg_config_default(sg_config **out);
SG_API sg_status sg_config_parse(const char *json_text, sg_config **out);
SG_API sg_status sg_config_load(const char *path, sg_config **out);
/* Full JSON document. Writes at most `capacity` bytes including the terminator;
 * `*needed` receives the required capacity. */
SG_API sg_status sg_config_to_json(const sg_config *config, char *buffer, size_t capacity, size_t *needed);
SG_API sg_status sg_config_workers(const sg_config *config, int *workers);
/* Replaces the prompt library with the non-empty lines of a UTF-8 text file. */
SG_API sg_status sg_config_load_prompts(sg_config *config, const char *path);
SG_API void sg_config_free(sg_config *config);

/* ---- scenes ---- */
SG_API sg_status sg_scene_generate(const sg_config *config, sg_scene **out);
SG_API sg_status sg_scene_load(const char *path, sg_scene **out);
SG_API sg_status sg_scene_save(const sg_scene *scene, const char *path);
SG_API sg_status sg_scene_size(const sg_scene *scene, size_t *count);
SG_API sg_status sg_scene_hash(const sg_scene *scene, uint64_t *hash);
/* kind: "noise" (parameter = std), "prune" or "clone" (parameter = fraction). */
SG_API sg_status sg_scene_distort(const sg_scene *scene, const char *kind, double parameter, uint64_t seed,
                                  sg_scene **out);
SG_API void sg_scene_free(sg_scene *scene);

/* ---- pipeline ---- */
/* Soft selection mask over the first mask.views training views. `mask_dir` holds one
 * PGM per view named <view_id>.pgm; NULL uses the procedural mask of mask.label. */
SG_API sg_status sg_mask_build(const sg_config *config, const sg_scene *scene, const char *mask_dir,
                               const char *out_csv);

/* Per-Gaussian update saliency (index,x,y,z,saliency): gradient norm of one edit-fit
 * step toward surrogate edits of the mask views, using edit.prompt and edit.editor_seed. */
SG_API sg_status sg_saliency(const sg_config *config, const sg_scene *scene, const char *out_csv);

/* Joint protection. `mask_csv` NULL selects every Gaussian. Writes the watermark key,
 * the per-iteration trace CSV and a JSON summary; NULL paths are skipped. */
SG_API sg_status sg_protect(const sg_config *config, const sg_scene *scene, const char *mask_csv,
                            const char *key_out, const char *trace_csv_out, const char *summary_json_out,
                            sg_scene **out, sg_protect_summary *summary);

/* set: "train" or "eval". Writes <dir>/<view_id>.ppm. */
SG_API sg_status sg_render(const sg_config *config, const sg_scene *scene, const char *set, const char *out_dir);

/* Decodes the evaluation renders of `scene` (or, if scene is NULL, the given PPM files)
 * with the key file and compares against the configured message.
 * CSV columns: view,decoded,bit_acc. */
SG_API sg_status sg_decode(const sg_config *config, const sg_scene *scene, const char *const *ppm_paths,
                           size_t ppm_count, const char *key_path, const char *out_csv, double *mean_accuracy);

/* Render-edit-update attack on the evaluation views. `render_dir` (nullable) receives
 * round<r>_<view_id>.ppm targets and final_<view_id>.ppm renders. */
SG_API sg_status sg_edit(const sg_config *config, const sg_scene *scene, const char *render_dir, sg_scene **out);

/* kind: noise, rotation, scaling, blur, crop, jpeg. */
SG_API sg_status sg_distort_image(const char *in_ppm, const char *kind, double parameter, uint64_t seed,
                                  uint64_t stream, const char *out_ppm);

/* One metric row (method,bit_acc,d_clip,d_clipT,d_clipD,psnr,ssim,lpips) comparing a
 * method scene against the original on the evaluation views. `key_path` NULL gives NA
 * bit accuracy. With append != 0 an existing CSV gains a row. */
SG_API sg_status sg_metrics(const sg_config *config, const sg_scene *original, const sg_scene *method,
                            const char *method_name, const char *key_path, const char *out_csv, int append);

/* method,T,E,F,sUCPS. With `reference_csv` every input row is scored against that pool. */
SG_API sg_status sg_sucps(const char *metrics_csv, const char *reference_csv, const char *out_csv);

/* Joins metric CSVs and appends the sUCPS column. */
SG_API sg_status sg_report(const char *const *metric_csvs, size_t count, const char *out_csv);

/* Writes wm_robustness.csv, adv_robustness.csv and wm_after_edit.csv into out_dir. */
SG_API sg_status sg_robustness(const sg_config *config, const sg_scene *original, const sg_scene *protected_scene,
                               const char *key_path, const char *out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SPLATGUARD_H */
