// Copyright 2026 The smcd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * C interface to the smcd change-detection library.
 *
 * Every object is an opaque handle owned by the caller and released with the
 * matching *_free function. Functions return SMCD_OK or an error status; the
 * message for the most recent failure on the calling thread is available from
 * smcd_last_error().
 */

#ifndef SMCD_SMCD_H_
#define SMCD_SMCD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SMCD_BUILDING_LIBRARY)
#    define SMCD_API __declspec(dllexport)
#  else
#    define SMCD_API __declspec(dllimport)
#  endif
#else
#  define SMCD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smcd_status {
  SMCD_OK = 0,
  SMCD_ERR_INVALID_ARGUMENT = 1,
  SMCD_ERR_IO = 2,
  SMCD_ERR_NOT_FOUND = 3,
  SMCD_ERR_MALFORMED_HEADER = 4,
  SMCD_ERR_TRUNCATED = 5,
  SMCD_ERR_ZERO_DIMENSION = 6,
  SMCD_ERR_NON_FINITE = 7,
  SMCD_ERR_DIMENSION_MISMATCH = 8,
  SMCD_ERR_INSUFFICIENT_DATA = 9,
  SMCD_ERR_NUMERIC = 10,
  SMCD_ERR_INTERNAL = 11
} smcd_status;

typedef enum smcd_diff_op { SMCD_OP_SUB = 0, SMCD_OP_LR = 1 } smcd_diff_op;

typedef enum smcd_raster_kind {
  SMCD_RASTER_INTENSITY = 0, /* clamp to 1e-6, reject NaN/Inf */
  SMCD_RASTER_RAW = 1
} smcd_raster_kind;

typedef enum smcd_threshold_mode {
  SMCD_THRESHOLD_SIGN = 0,
  SMCD_THRESHOLD_OTSU = 1
} smcd_threshold_mode;

typedef enum smcd_pma_denominator {
  SMCD_PMA_CHANGED = 0,
  SMCD_PMA_UNCHANGED = 1
} smcd_pma_denominator;

typedef enum smcd_report_format {
  SMCD_REPORT_KEY_VALUE = 0,
  SMCD_REPORT_SINGLE_LINE = 1
} smcd_report_format;

typedef struct smcd_raster smcd_raster;
typedef struct smcd_labels smcd_labels;
typedef struct smcd_constraints smcd_constraints;
typedef struct smcd_model smcd_model;

SMCD_API const char* smcd_version(void);
SMCD_API const char* smcd_last_error(void);
SMCD_API const char* smcd_status_name(smcd_status status);

/* Rasters */
SMCD_API smcd_status smcd_raster_create(uint32_t width, uint32_t height,
                                        const float* data, smcd_raster** out);
SMCD_API smcd_status smcd_raster_load(const char* path, smcd_raster_kind kind,
                                      smcd_raster** out);
SMCD_API smcd_status smcd_raster_save(const smcd_raster* raster,
                                      const char* path);
SMCD_API smcd_status smcd_raster_save_preview(const smcd_raster* raster,
                                              const char* path);
SMCD_API uint32_t smcd_raster_width(const smcd_raster* raster);
SMCD_API uint32_t smcd_raster_height(const smcd_raster* raster);
SMCD_API const float* smcd_raster_data(const smcd_raster* raster);
SMCD_API void smcd_raster_free(smcd_raster* raster);

/* Label maps (0 = unchanged, 1 = changed) */
SMCD_API smcd_status smcd_labels_create(uint32_t width, uint32_t height,
                                        const uint8_t* data, smcd_labels** out);
SMCD_API smcd_status smcd_labels_load(const char* path, smcd_labels** out);
SMCD_API smcd_status smcd_labels_save(const smcd_labels* labels,
                                      const char* path);
SMCD_API uint32_t smcd_labels_width(const smcd_labels* labels);
SMCD_API uint32_t smcd_labels_height(const smcd_labels* labels);
SMCD_API const uint8_t* smcd_labels_data(const smcd_labels* labels);
SMCD_API void smcd_labels_free(smcd_labels* labels);

/* Synthetic scenes */
typedef struct smcd_scene_config {
  uint32_t width;
  uint32_t height;
  uint32_t looks;
  double shift_y;
  double shift_x;
  uint32_t regions;
  double contrast;
  uint64_t seed;
} smcd_scene_config;

SMCD_API smcd_scene_config smcd_scene_config_default(void);
SMCD_API smcd_status smcd_generate_scene(const smcd_scene_config* config,
                                         smcd_raster** i1, smcd_raster** i2,
                                         smcd_labels** truth);

/* Constraint sampling */
SMCD_API smcd_status smcd_sample_constraints(
    const smcd_raster* i1, const smcd_raster* i2, const smcd_labels* labels,
    smcd_diff_op op, uint32_t patch_side, uint32_t n, uint32_t radius,
    uint64_t seed, smcd_constraints** out);
SMCD_API smcd_status smcd_constraints_save(const smcd_constraints* cs,
                                           const char* path);
SMCD_API size_t smcd_constraints_count(const smcd_constraints* cs);
SMCD_API void smcd_constraints_free(smcd_constraints* cs);

/* Training */
typedef struct smcd_train_config {
  double c;
  double tol;
  uint32_t max_iters;
  int psd_project; /* nonzero = project M onto the PSD cone */
} smcd_train_config;

typedef struct smcd_train_summary {
  uint32_t iterations;
  int converged;
  double xi;
  double violation;
  double objective;
} smcd_train_summary;

/* Receives one tab-separated line per cutting-plane iteration (no newline). */
typedef void (*smcd_log_fn)(const char* line, void* user);

SMCD_API smcd_train_config smcd_train_config_default(void);
SMCD_API smcd_status smcd_train(const smcd_constraints* cs,
                                const smcd_train_config* config,
                                smcd_log_fn log, void* log_user,
                                smcd_model** out, smcd_train_summary* summary);

/* Metric models */
SMCD_API smcd_status smcd_model_load(const char* path, smcd_model** out);
SMCD_API smcd_status smcd_model_save(const smcd_model* model, const char* path);
SMCD_API uint32_t smcd_model_patch_side(const smcd_model* model);
SMCD_API smcd_diff_op smcd_model_op(const smcd_model* model);
SMCD_API double smcd_model_bias(const smcd_model* model);
/* Copies the d*d row-major matrix into `out` (capacity in doubles). */
SMCD_API smcd_status smcd_model_matrix(const smcd_model* model, double* out,
                                       size_t capacity);
SMCD_API void smcd_model_free(smcd_model* model);

/* Inference and evaluation */
SMCD_API smcd_status smcd_difference_image(const smcd_raster* i1,
                                           const smcd_raster* i2,
                                           const smcd_model* model,
                                           smcd_raster** out);
SMCD_API smcd_status smcd_change_map(const smcd_raster* scores,
                                     smcd_threshold_mode mode,
                                     smcd_labels** out);
SMCD_API smcd_status smcd_baseline_lr_map(const smcd_raster* i1,
                                          const smcd_raster* i2,
                                          uint32_t window, smcd_raster** out);

typedef struct smcd_eval_report {
  uint64_t tp, fp, fn, tn;
  uint64_t fa, ma;
  double p_fa, p_ma, kappa;
  int kappa_degenerate;
} smcd_eval_report;

SMCD_API smcd_status smcd_evaluate(const smcd_labels* pred,
                                   const smcd_labels* truth,
                                   smcd_pma_denominator denom,
                                   smcd_eval_report* out);
/* Writes a NUL-terminated report into buf and returns the full length
 * (excluding NUL); call with capacity 0 to size the buffer. */
SMCD_API size_t smcd_format_report(const smcd_eval_report* report,
                                   smcd_report_format format, char* buf,
                                   size_t capacity);

#ifdef __cplusplus
}
#endif

#endif  // SMCD_SMCD_H_
