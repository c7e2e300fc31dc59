#ifndef CELLPMB_H
#define CELLPMB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define CP_PMB_CM 0

#define CP_PMB_AM 1

#define CP_PMB 2

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_INVALID_FRAME = 3,
  CP_STATUS_RUNTIME_ERROR = 4,
  CP_STATUS_BUFFER_TOO_SMALL = 5,
  CP_STATUS_PANIC = 6,
} CpStatus;

/**
 * Opaque tracker handle.
 */
typedef struct CpTracker CpTracker;

typedef struct CpFilterOptions {
  /**
   * One of `CP_PMB_CM`, `CP_PMB_AM`, `CP_PMB`.
   */
  uint32_t kind;
  uint32_t n_rows;
  uint32_t n_cols;
  double cell_side;
  double sigma_n_sq;
  double eta;
  double dt;
  double p_s;
  uint32_t particles_per_bernoulli;
  uint32_t phd_particle_budget;
  uint32_t birth_particles;
  uint64_t seed;
} CpFilterOptions;

typedef struct CpEstimate {
  uint32_t label_step;
  uint32_t label_cell;
  double r;
  double p1;
  double p2;
  double v1;
  double v2;
  double gamma;
} CpEstimate;

typedef struct CpGospa {
  double total;
  double localization;
  double missed;
  double false_;
} CpGospa;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fills `out` with the default 32 x 32 setup for PMB-CM at eta = 4.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum CpStatus cp_default_options(struct CpFilterOptions *out);

/**
 * Creates a tracker. On success `*out` owns a new handle.
 *
 * # Safety
 * `options` must be null or point to a valid `CpFilterOptions`; `out` must
 * be null or valid for writes.
 */
enum CpStatus cp_tracker_new(const struct CpFilterOptions *options, struct CpTracker **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `tracker` must be null or a handle from [`cp_tracker_new`] that has not
 * been freed.
 */
void cp_tracker_free(struct CpTracker *tracker);

/**
 * Runs one predict/update cycle on a scan given as `n` detections: cell
 * indices (row-major) and their amplitudes, which must exceed the
 * tracker's threshold.
 *
 * # Safety
 * `tracker` must be a live handle; `cells` and `amplitudes` must each point
 * to `n` readable elements (they may be null when `n` is 0).
 */
enum CpStatus cp_tracker_step(struct CpTracker *tracker,
                              const uint32_t *cells,
                              const double *amplitudes,
                              uintptr_t n);

/**
 * Number of estimates after the last step; 0 for a null handle.
 *
 * # Safety
 * `tracker` must be null or a live handle.
 */
uintptr_t cp_tracker_num_estimates(const struct CpTracker *tracker);

/**
 * Copies the estimates of the last step into `out`. `*written` receives the
 * number copied; with too small a buffer nothing is copied, `*written`
 * receives the required length and `BufferTooSmall` is returned.
 *
 * # Safety
 * `tracker` must be a live handle, `out` valid for `capacity` writes (or
 * null when `capacity` is 0), and `written` valid for a write.
 */
enum CpStatus cp_tracker_estimates(const struct CpTracker *tracker,
                                   struct CpEstimate *out,
                                   uintptr_t capacity,
                                   uintptr_t *written);

/**
 * Expected number of objects: PHD mass plus the sum of existence
 * probabilities.
 *
 * # Safety
 * `tracker` must be a live handle and `out` valid for a write.
 */
enum CpStatus cp_tracker_expected_cardinality(const struct CpTracker *tracker, double *out);

/**
 * Detection probability of an object with intensity `gamma`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum CpStatus cp_p_d(double gamma, double eta, double sigma_n_sq, double *out);

/**
 * Per-cell false-alarm probability.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum CpStatus cp_p_fa(double eta, double sigma_n_sq, double *out);

/**
 * GOSPA distance (alpha = 2) between `n` truth and `m` estimated positions,
 * each given as interleaved `x, y` pairs.
 *
 * # Safety
 * `truth_xy` must hold `2 n` readable values and `estimates_xy` `2 m` (either
 * may be null when its count is 0); `out` must be valid for a write.
 */
enum CpStatus cp_gospa(const double *truth_xy,
                       uintptr_t n,
                       const double *estimates_xy,
                       uintptr_t m,
                       double c,
                       double p,
                       struct CpGospa *out);

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cp_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLPMB_H */
