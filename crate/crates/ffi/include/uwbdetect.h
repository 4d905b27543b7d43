#ifndef UWBDETECT_H
#define UWBDETECT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UwbDataType {
  UWB_DATA_TYPE_RAW = 0,
  UWB_DATA_TYPE_BASEBAND = 1,
  UWB_DATA_TYPE_MOTION_FILTERED = 2,
} UwbDataType;

typedef enum UwbEnvironment {
  UWB_ENVIRONMENT_INDOOR = 0,
  UWB_ENVIRONMENT_OUTDOOR = 1,
} UwbEnvironment;

/**
 * Order matches the report order: LR, Per, kNN, SVM, DT, RF, ET, SGB.
 */
typedef enum UwbEstimator {
  UWB_ESTIMATOR_LOGISTIC_REGRESSION = 0,
  UWB_ESTIMATOR_PERCEPTRON = 1,
  UWB_ESTIMATOR_K_NEAREST_NEIGHBORS = 2,
  UWB_ESTIMATOR_LINEAR_SVC = 3,
  UWB_ESTIMATOR_DECISION_TREE = 4,
  UWB_ESTIMATOR_RANDOM_FOREST = 5,
  UWB_ESTIMATOR_EXTRA_TREES = 6,
  UWB_ESTIMATOR_GRADIENT_BOOSTING = 7,
} UwbEstimator;

typedef enum UwbScheme {
  UWB_SCHEME_SIMPLE4 = 0,
  UWB_SCHEME_GRID10 = 1,
} UwbScheme;

typedef enum UwbStatus {
  UWB_STATUS_OK = 0,
  UWB_STATUS_NULL_POINTER = 1,
  UWB_STATUS_INVALID_INPUT = 2,
  UWB_STATUS_DEGENERATE_SCAN = 3,
  UWB_STATUS_INVALID_PARAM = 4,
  UWB_STATUS_MISSING_INPUT = 5,
  UWB_STATUS_FORMAT = 6,
  UWB_STATUS_IO = 7,
  UWB_STATUS_PANIC = 8,
} UwbStatus;

/**
 * Opaque dataset handle.
 */
typedef struct UwbDataset UwbDataset;

/**
 * Opaque trained model handle.
 */
typedef struct UwbModel UwbModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call on the same thread.
 */
const char *uwb_last_error(void);

/**
 * Zero-mean, unit-variance copy of `x[0..n]` into `out[0..n]`.
 *
 * # Safety
 * `x` and `out` must point to `n` valid doubles.
 */
enum UwbStatus uwb_standardize(const double *x, size_t n, double *out);

/**
 * Analytic-signal envelope of `x[0..n]`.
 *
 * # Safety
 * `x` and `out` must point to `n` valid doubles.
 */
enum UwbStatus uwb_envelope(const double *x, size_t n, double *out);

/**
 * Motion filter over the scans at `t`, `t-1` and `t-2`.
 *
 * # Safety
 * All four pointers must point to `n` valid doubles.
 */
enum UwbStatus uwb_motion_filter(const double *t,
                                 const double *t1,
                                 const double *t2,
                                 size_t n,
                                 double *out);

/**
 * Synthesize a raw dataset with the built-in scenario, default labeling
 * geometry and target model. The result keeps its slow-time history, so it
 * can be passed to [`uwb_dataset_derive`].
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum UwbStatus uwb_dataset_generate(enum UwbEnvironment environment,
                                    enum UwbScheme scheme,
                                    size_t n_per_class,
                                    uint64_t seed,
                                    struct UwbDataset **out);

/**
 * Derive a representation from a raw dataset. Constant scans are dropped
 * and counted in `dropped` (may be NULL).
 *
 * # Safety
 * `raw` must be a live handle; `out` a valid handle slot.
 */
enum UwbStatus uwb_dataset_derive(const struct UwbDataset *raw,
                                  enum UwbDataType kind,
                                  struct UwbDataset **out,
                                  size_t *dropped);

/**
 * Standardize every scan of a dataset on its own.
 *
 * # Safety
 * `ds` must be a live handle; `out` a valid handle slot.
 */
enum UwbStatus uwb_dataset_standardize(const struct UwbDataset *ds,
                                       struct UwbDataset **out,
                                       size_t *dropped);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum UwbStatus uwb_dataset_read(const char *path, struct UwbDataset **out);

/**
 * # Safety
 * `ds` must be a live handle; `path` a NUL-terminated string.
 */
enum UwbStatus uwb_dataset_write(const struct UwbDataset *ds, const char *path);

/**
 * Number of examples and bins per scan.
 *
 * # Safety
 * `ds` must be a live handle; the outputs valid pointers.
 */
enum UwbStatus uwb_dataset_shape(const struct UwbDataset *ds, size_t *n_examples, size_t *n_bins);

/**
 * Copy the row-major scan matrix (`n_examples * n_bins` doubles) and the
 * labels (`n_examples` values). Either output may be NULL to skip it.
 *
 * # Safety
 * `ds` must be a live handle; non-null outputs must have room for the
 * sizes reported by [`uwb_dataset_shape`].
 */
enum UwbStatus uwb_dataset_copy(const struct UwbDataset *ds, double *scans, uint32_t *labels);

/**
 * # Safety
 * `ds` must be NULL or a handle not yet freed.
 */
void uwb_dataset_free(struct UwbDataset *ds);

/**
 * Fit an estimator on a dataset. `params_json` is a JSON object holding
 * every hyperparameter of the estimator, e.g. `{"n_neighbors": 3}`.
 *
 * # Safety
 * `ds` must be a live handle, `params_json` a NUL-terminated string and
 * `out` a valid handle slot.
 */
enum UwbStatus uwb_model_fit(enum UwbEstimator kind,
                             const char *params_json,
                             uint64_t seed,
                             const struct UwbDataset *ds,
                             struct UwbModel **out);

/**
 * Predict `rows` scans of `cols` bins each, row-major in `x`.
 *
 * # Safety
 * `model` must be a live handle, `x` must hold `rows * cols` doubles and
 * `labels` room for `rows` values.
 */
enum UwbStatus uwb_model_predict(const struct UwbModel *model,
                                 const double *x,
                                 size_t rows,
                                 size_t cols,
                                 uint32_t *labels);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum UwbStatus uwb_model_save(const struct UwbModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum UwbStatus uwb_model_load(const char *path, struct UwbModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void uwb_model_free(struct UwbModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UWBDETECT_H */
