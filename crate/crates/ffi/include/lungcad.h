#ifndef LUNGCAD_H
#define LUNGCAD_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LungcadStatus {
  LUNGCAD_STATUS_OK = 0,
  LUNGCAD_STATUS_NULL_POINTER = 1,
  LUNGCAD_STATUS_INVALID_INPUT = 2,
  LUNGCAD_STATUS_IO = 3,
  LUNGCAD_STATUS_PARSE = 4,
  LUNGCAD_STATUS_SCHEMA_VERSION = 5,
  LUNGCAD_STATUS_DIMENSION_MISMATCH = 6,
  LUNGCAD_STATUS_EMPTY_MASK = 7,
  LUNGCAD_STATUS_UNDEFINED_METRIC = 8,
  LUNGCAD_STATUS_NON_FINITE = 9,
  LUNGCAD_STATUS_PANIC = 10,
} LungcadStatus;

/**
 * Opaque trained classifier.
 */
typedef struct LungcadModel LungcadModel;

typedef struct LungcadMetrics {
  double sensitivity;
  double specificity;
  double accuracy;
  double f_measure;
} LungcadMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *lungcad_last_error(void);

/**
 * Length of the default feature vector (29).
 */
size_t lungcad_feature_len(void);

/**
 * Loads a model document from a file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_model` must be writable.
 */
enum LungcadStatus lungcad_model_load(const char *path, struct LungcadModel **out_model);

/**
 * Parses a model document held in memory.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_model` must be writable.
 */
enum LungcadStatus lungcad_model_from_json(const char *json, struct LungcadModel **out_model);

/**
 * # Safety
 * `model` must be NULL or a handle from `lungcad_model_load` /
 * `lungcad_model_from_json` that has not been freed.
 */
void lungcad_model_free(struct LungcadModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out_dim` must be writable.
 */
enum LungcadStatus lungcad_model_dim(const struct LungcadModel *model, size_t *out_dim);

/**
 * Decision threshold θ; may be ±infinity.
 *
 * # Safety
 * `model` must be a live handle; `out_threshold` must be writable.
 */
enum LungcadStatus lungcad_model_threshold(const struct LungcadModel *model, double *out_threshold);

/**
 * Scores one raw (unstandardized) feature vector.
 *
 * # Safety
 * `model` must be a live handle, `features` must point to `len` values and
 * `out_score` must be writable.
 */
enum LungcadStatus lungcad_model_score(const struct LungcadModel *model,
                                       const double *features,
                                       size_t len,
                                       double *out_score);

/**
 * Labels one raw feature vector: `1` malignant, `-1` benign. The score is
 * also written when `out_score` is not NULL.
 *
 * # Safety
 * As for `lungcad_model_score`; `out_label` must be writable.
 */
enum LungcadStatus lungcad_model_predict(const struct LungcadModel *model,
                                         const double *features,
                                         size_t len,
                                         int32_t *out_label,
                                         double *out_score);

/**
 * Extracts the 29 default features of one annotated nodule.
 *
 * `pixels` holds `width * height` row-major raw samples in
 * `[0, source_max]`. The contours are concatenated `(x, y)` pairs in
 * `vertices_xy`; `vertex_counts[i]` is the number of vertices of contour
 * `i`. Their union forms the nodule mask.
 *
 * # Safety
 * All pointers must reference buffers of the stated lengths;
 * `out_features` must hold `out_len` values.
 */
enum LungcadStatus lungcad_extract_features(const uint16_t *pixels,
                                            size_t width,
                                            size_t height,
                                            uint32_t source_max,
                                            double spacing_x,
                                            double spacing_y,
                                            const double *vertices_xy,
                                            const size_t *vertex_counts,
                                            size_t n_contours,
                                            double margin,
                                            double *out_features,
                                            size_t out_len);

/**
 * Sensitivity, specificity, accuracy and F from confusion counts.
 *
 * # Safety
 * `out_metrics` must be writable.
 */
enum LungcadStatus lungcad_metrics(uint64_t tp,
                                   uint64_t fn_,
                                   uint64_t tn,
                                   uint64_t fp,
                                   struct LungcadMetrics *out_metrics);

/**
 * Area under the ROC curve. `labels` holds `1` (malignant) or `-1`.
 *
 * # Safety
 * `scores` and `labels` must point to `n` values; `out_auc` must be writable.
 */
enum LungcadStatus lungcad_auc(const double *scores,
                               const int32_t *labels,
                               size_t n,
                               double *out_auc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LUNGCAD_H */
