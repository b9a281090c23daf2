#ifndef KIRSF_H
#define KIRSF_H

/* Generated by cbindgen from src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum KirsfStatus {
  KIRSF_STATUS_OK = 0,
  KIRSF_STATUS_NULL_POINTER = 1,
  KIRSF_STATUS_INVALID_ARGUMENT = 2,
  KIRSF_STATUS_IO = 3,
  KIRSF_STATUS_PARSE = 4,
  KIRSF_STATUS_DIMENSION_MISMATCH = 5,
  KIRSF_STATUS_NO_EVENTS = 6,
  KIRSF_STATUS_VERSION_MISMATCH = 7,
  KIRSF_STATUS_CORRUPT_PAYLOAD = 8,
  KIRSF_STATUS_UNDEFINED = 9,
  KIRSF_STATUS_PANIC = 10,
  KIRSF_STATUS_INTERNAL = 11,
} KirsfStatus;

// Values accepted in `KirsfFitOptions::split_rule`.
typedef enum KirsfSplitRule {
  KIRSF_SPLIT_RULE_LOGRANK = 0,
  KIRSF_SPLIT_RULE_DEVIANCE = 1,
} KirsfSplitRule;

// Values accepted in `KirsfFitOptions::kernel`.
typedef enum KirsfKernel {
  KIRSF_KERNEL_NONE = 0,
  KIRSF_KERNEL_LINEAR = 1,
  KIRSF_KERNEL_POLYNOMIAL = 2,
  KIRSF_KERNEL_GAUSSIAN = 3,
} KirsfKernel;

// Opaque survival dataset.
typedef struct KirsfDataset KirsfDataset;

// Opaque fitted model.
typedef struct KirsfModel KirsfModel;

// Forest and kernel settings for `kirsf_model_fit`.
//
// Fill with `kirsf_fit_options_default` and override fields as needed.
typedef struct KirsfFitOptions {
  size_t n_trees;
  // Candidate features per node; 0 selects ceil(sqrt(p)).
  size_t mtry;
  size_t min_node_events;
  size_t min_node_size;
  // 0 means unlimited.
  size_t max_depth;
  // One of `KirsfSplitRule`.
  uint32_t split_rule;
  // One of `KirsfKernel`.
  uint32_t kernel;
  // Polynomial degree.
  uint32_t degree;
  // Polynomial offset c.
  double offset_c;
  // Gaussian sigma^2; values <= 0 select the standardized dimension.
  double sigma2;
  uint64_t seed;
} KirsfFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread, or null if none.
//
// The pointer stays valid until the next failing call on the same thread.
const char *kirsf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *kirsf_version(void);

// Writes the library defaults into `out`.
//
// # Safety
// `out` must be null or point to writable memory for one `KirsfFitOptions`.
enum KirsfStatus kirsf_fit_options_default(struct KirsfFitOptions *out);

// Loads a CSV file; every numeric column other than `time_column` and
// `event_column` becomes a covariate.
//
// # Safety
// String arguments must be null or NUL-terminated; `out` must be null or
// writable. The handle written to `out` is released with
// `kirsf_dataset_free`.
enum KirsfStatus kirsf_dataset_load_csv(const char *path,
                                        const char *time_column,
                                        const char *event_column,
                                        struct KirsfDataset **out);

// Builds a dataset from arrays; covariates are named `X1..Xp`.
//
// `events[i]` must be 0 (censored) or 1 (event).
//
// # Safety
// `times` and `events` must hold `n` elements and `covariates` `n * p`
// elements; `out` must be null or writable.
enum KirsfStatus kirsf_dataset_from_arrays(const double *times,
                                           const uint8_t *events,
                                           const double *covariates,
                                           size_t n,
                                           size_t p,
                                           struct KirsfDataset **out);

// Number of records and covariates.
//
// # Safety
// `dataset` must be null or a live handle; outputs must be null or writable.
enum KirsfStatus kirsf_dataset_shape(const struct KirsfDataset *dataset,
                                     size_t *n_out,
                                     size_t *p_out);

// Releases a dataset handle; null is ignored.
//
// # Safety
// `dataset` must be null or a handle not yet freed.
void kirsf_dataset_free(struct KirsfDataset *dataset);

// Fits a model. When `oob_error_out` is non-null it receives the
// out-of-bag prediction error `1 - C`.
//
// # Safety
// `dataset` must be a live handle, `options` null or readable, and the
// output pointers null or writable. The model is released with
// `kirsf_model_free`.
enum KirsfStatus kirsf_model_fit(const struct KirsfDataset *dataset,
                                 const struct KirsfFitOptions *options,
                                 struct KirsfModel **out,
                                 double *oob_error_out);

// Number of raw covariates the model expects.
//
// # Safety
// `model` must be null or a live handle; `out` null or writable.
enum KirsfStatus kirsf_model_input_dim(const struct KirsfModel *model, size_t *out);

// Ensemble mortality for `n` rows of `p` raw covariates, written to `out[0..n]`.
//
// # Safety
// `covariates` must hold `n * p` values and `out` room for `n` values.
enum KirsfStatus kirsf_model_predict_mortality(const struct KirsfModel *model,
                                               const double *covariates,
                                               size_t n,
                                               size_t p,
                                               double *out);

// Saves a model to `path`.
//
// # Safety
// `model` must be a live handle and `path` NUL-terminated.
enum KirsfStatus kirsf_model_save(const struct KirsfModel *model, const char *path);

// Loads a model saved by `kirsf_model_save` or the command-line tool.
//
// # Safety
// `path` must be NUL-terminated and `out` null or writable.
enum KirsfStatus kirsf_model_load(const char *path, struct KirsfModel **out);

// Releases a model handle; null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void kirsf_model_free(struct KirsfModel *model);

// Harrell's C-index of `predicted` (higher means worse) against the
// observed times and 0/1 event indicators.
//
// # Safety
// The three arrays must hold `n` elements; `out` null or writable.
enum KirsfStatus kirsf_c_index(const double *times,
                               const uint8_t *events,
                               const double *predicted,
                               size_t n,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KIRSF_H */
