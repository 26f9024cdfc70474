#ifndef SMOOTHFIX_H
#define SMOOTHFIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_RUNTIME = 3,
  SF_STATUS_PANIC = 4,
} SfStatus;

/**
 * Opaque weight model.
 */
typedef struct SfModel SfModel;

/**
 * Opaque sample pool.
 */
typedef struct SfPool SfPool;

typedef struct SfComplex {
  double re;
  double im;
} SfComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *sf_last_error(void);

/**
 * Parses a model from JSON such as `{"model": {"type": "polya", "b": 8}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_model` a valid pointer.
 */
enum SfStatus sf_model_from_json(const char *json, struct SfModel **out_model);

/**
 * # Safety
 * `model` must come from [`sf_model_from_json`] and not be used afterwards. Null is ignored.
 */
void sf_model_free(struct SfModel *model);

/**
 * `m(s) = E[Σ_j |T_j|^s]`: exact where available, otherwise a Monte Carlo mean
 * over `samples` draws with the given seed.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SfStatus sf_model_moment(const struct SfModel *model,
                              double s,
                              size_t samples,
                              uint64_t seed,
                              double *out_value,
                              double *out_stderr);

/**
 * Smallest root `α` of `m(α) = 1` in `(0, s_max]`. `*out_found` is 0 when `m`
 * stays below 1 on the whole interval, in which case `*out_alpha` is NaN.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SfStatus sf_find_alpha(const struct SfModel *model,
                            double s_max,
                            size_t samples,
                            uint64_t seed,
                            double *out_alpha,
                            int32_t *out_found);

/**
 * Population dynamics: `iterations` applications of the smoothing transform to a
 * pool of `n` copies of `init`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SfStatus sf_popdyn_run(const struct SfModel *model,
                            size_t n,
                            size_t iterations,
                            uint64_t seed,
                            struct SfComplex init,
                            struct SfPool **out_pool);

/**
 * Builds a pool from `len` samples given as separate real and imaginary arrays.
 *
 * # Safety
 * `re` and `im` must point to `len` readable values.
 */
enum SfStatus sf_pool_from_samples(const double *re,
                                   const double *im,
                                   size_t len,
                                   struct SfPool **out_pool);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `pool` must be null or a live handle.
 */
size_t sf_pool_len(const struct SfPool *pool);

/**
 * Copies the samples into `re` and `im`, which must each hold `capacity`
 * values with `capacity >= sf_pool_len(pool)`.
 *
 * # Safety
 * `re` and `im` must point to `capacity` writable values.
 */
enum SfStatus sf_pool_copy(const struct SfPool *pool, double *re, double *im, size_t capacity);

/**
 * # Safety
 * `pool` must come from this library and not be used afterwards. Null is ignored.
 */
void sf_pool_free(struct SfPool *pool);

/**
 * Empirical characteristic function `φ̂(ξ) = (1/n) Σ_k exp(-i(ξ₁ Re Z_k + ξ₂ Im Z_k))`.
 *
 * # Safety
 * Pointers must be valid; `out_stderr` may be null.
 */
enum SfStatus sf_ecf(const struct SfPool *pool,
                     struct SfComplex xi,
                     struct SfComplex *out_value,
                     double *out_stderr);

/**
 * Assumption report as a JSON document, with `samples` Monte Carlo draws and
 * default options otherwise. Release the result with [`sf_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum SfStatus sf_analyze_json(const struct SfModel *model,
                              size_t samples,
                              uint64_t seed,
                              char **out_json);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is ignored.
 */
void sf_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SMOOTHFIX_H */
