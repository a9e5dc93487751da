#ifndef GOE_H
#define GOE_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GoeStatus {
  GOE_STATUS_OK = 0,
  GOE_STATUS_NULL_POINTER = 1,
  GOE_STATUS_INVALID_UTF8 = 2,
  GOE_STATUS_INVALID_ARGUMENT = 3,
  GOE_STATUS_IO = 4,
  GOE_STATUS_PARSE = 5,
  GOE_STATUS_INSUFFICIENT_NODES = 6,
  GOE_STATUS_LLM = 7,
  GOE_STATUS_NUMERIC = 8,
  GOE_STATUS_PANIC = 9,
  GOE_STATUS_OTHER = 10,
} GoeStatus;

/**
 * Opaque dataset handle.
 */
typedef struct GoeDataset GoeDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *goe_last_error(void);

/**
 * Loads a dataset directory.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum GoeStatus goe_dataset_load(const char *dir, struct GoeDataset **out);

/**
 * # Safety
 * `dataset` must come from [`goe_dataset_load`] and not be freed twice.
 */
void goe_dataset_free(struct GoeDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum GoeStatus goe_dataset_node_count(const struct GoeDataset *dataset, uintptr_t *out);

/**
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum GoeStatus goe_dataset_embedding_dim(const struct GoeDataset *dataset, uintptr_t *out);

/**
 * Number of distinct categories declared by the dataset manifest.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum GoeStatus goe_dataset_category_count(const struct GoeDataset *dataset, uintptr_t *out);

/**
 * Energy `-logsumexp(z)` of each row of a row-major `rows x cols` matrix.
 *
 * # Safety
 * `logits` must hold `rows * cols` doubles; `out` must hold `rows`.
 */
enum GoeStatus goe_energy(const double *logits, uintptr_t rows, uintptr_t cols, double *out);

/**
 * AUROC with OOD as the positive class (higher score = more OOD).
 *
 * # Safety
 * `id` and `ood` must hold `n_id` and `n_ood` doubles; `out` must be writable.
 */
enum GoeStatus goe_auroc(const double *id,
                         uintptr_t n_id,
                         const double *ood,
                         uintptr_t n_ood,
                         double *out);

/**
 * # Safety
 * Same contract as [`goe_auroc`].
 */
enum GoeStatus goe_aupr(const double *id,
                        uintptr_t n_id,
                        const double *ood,
                        uintptr_t n_ood,
                        double *out);

/**
 * # Safety
 * Same contract as [`goe_auroc`].
 */
enum GoeStatus goe_fpr95(const double *id,
                         uintptr_t n_id,
                         const double *ood,
                         uintptr_t n_ood,
                         double *out);

/**
 * Runs a full experiment from a JSON config and returns the report as
 * JSON in `*out`, to be released with [`goe_string_free`].
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum GoeStatus goe_run_experiment(const char *config_json, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void goe_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GOE_H */
