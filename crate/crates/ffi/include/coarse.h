#ifndef COARSE_H
#define COARSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CoarseStatus {
  COARSE_STATUS_OK = 0,
  COARSE_STATUS_INVALID_ARGUMENT = 1,
  COARSE_STATUS_NULL_POINTER = 2,
  COARSE_STATUS_DIMENSION = 3,
  COARSE_STATUS_RUNTIME = 4,
  COARSE_STATUS_PANIC = 5,
} CoarseStatus;

/**
 * Friction mechanisms selectable across the boundary.
 */
typedef enum CoarseFrictionKind {
  /**
   * `c(y) = h·⌊y/h⌋` with `h` the parameter.
   */
  COARSE_FRICTION_KIND_FLOOR = 0,
  COARSE_FRICTION_KIND_IDENTITY = 1,
} CoarseFrictionKind;

/**
 * Structural identifiability verdict.
 */
typedef enum CoarseVerdict {
  COARSE_VERDICT_IDENTIFIABLE = 0,
  COARSE_VERDICT_NON_IDENTIFIABLE = 1,
  COARSE_VERDICT_INCONCLUSIVE = 2,
} CoarseVerdict;

/**
 * Opaque estimator configuration handle.
 */
typedef struct CoarseEstimatorConfig CoarseEstimatorConfig;

/**
 * Opaque partition handle.
 */
typedef struct CoarsePartition CoarsePartition;

typedef struct CoarseVarianceRatio {
  double r;
  double var_orig;
  double var_trunc;
  double se;
} CoarseVarianceRatio;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *coarse_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *coarse_version(void);

/**
 * Axis-aligned cubes of side `width` in `dim` dimensions.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum CoarseStatus coarse_partition_grid(size_t dim, double width, struct CoarsePartition **out);

/**
 * Parallel slabs of `width` along the normal `normal[0..dim]`.
 *
 * # Safety
 * `normal` must point to `dim` doubles; `out` must be writable.
 */
enum CoarseStatus coarse_partition_slabs(const double *normal,
                                         size_t dim,
                                         double width,
                                         struct CoarsePartition **out);

/**
 * Intervals between `n` sorted breakpoints on the line.
 *
 * # Safety
 * `points` must point to `n` doubles; `out` must be writable.
 */
enum CoarseStatus coarse_partition_breakpoints(const double *points,
                                               size_t n,
                                               struct CoarsePartition **out);

/**
 * Dimension of a partition.
 *
 * # Safety
 * `partition` must be a live handle or null; `dim` must be writable.
 */
enum CoarseStatus coarse_partition_dim(const struct CoarsePartition *partition, size_t *dim);

/**
 * Releases a partition; null is ignored.
 *
 * # Safety
 * `partition` must come from a `coarse_partition_*` constructor and not be used afterwards.
 */
void coarse_partition_free(struct CoarsePartition *partition);

/**
 * Estimator configuration with the default practical schedule.
 *
 * # Safety
 * `out` must be writable.
 */
enum CoarseStatus coarse_estimator_config_new(double eps,
                                              double delta,
                                              double alpha,
                                              double warm_radius,
                                              struct CoarseEstimatorConfig **out_ptr);

/**
 * Boosting runs per stage; 0 restores the default `⌈48 ln(1/δ)⌉`.
 *
 * # Safety
 * `config` must be a live handle or null.
 */
enum CoarseStatus coarse_estimator_config_set_boost_repeats(struct CoarseEstimatorConfig *config,
                                                            size_t repeats);

/**
 * Fixed-budget mode with `n` observations; 0 switches back to accuracy mode.
 *
 * # Safety
 * `config` must be a live handle or null.
 */
enum CoarseStatus coarse_estimator_config_set_budget(struct CoarseEstimatorConfig *config,
                                                     size_t n);

/**
 * Enables or disables the warm-start stage.
 *
 * # Safety
 * `config` must be a live handle or null.
 */
enum CoarseStatus coarse_estimator_config_set_two_stage(struct CoarseEstimatorConfig *config,
                                                        bool enabled);

/**
 * Releases a configuration; null is ignored.
 *
 * # Safety
 * `config` must come from [`coarse_estimator_config_new`] and not be used afterwards.
 */
void coarse_estimator_config_free(struct CoarseEstimatorConfig *config);

/**
 * Simulates coarse observations of 𝒩(`mu_star`, I) through `partition`
 * and estimates the mean. Writes `dim` values to `mu_hat` and the number
 * of observations used to `samples` (if non-null). Same seed, same result.
 *
 * # Safety
 * Handles must be live; `mu_star` and `mu_hat` must hold `dim` doubles.
 */
enum CoarseStatus coarse_estimate_mean(const struct CoarsePartition *partition,
                                       const double *mu_star,
                                       size_t dim,
                                       const struct CoarseEstimatorConfig *config,
                                       uint64_t seed,
                                       double *mu_hat,
                                       size_t *samples);

/**
 * `n` draws from 𝒩(mean, 1) restricted to `[lo, hi]` (infinite ends allowed).
 *
 * # Safety
 * `out` must hold `n` doubles.
 */
enum CoarseStatus coarse_sample_truncated_1d(double mean,
                                             double lo,
                                             double hi,
                                             uint64_t seed,
                                             size_t n,
                                             double *out_ptr);

/**
 * Friction regression on `n` rows of `d` covariates (row-major `x`) and
 * observed outputs `z`. Writes `d` coefficients to `w_hat`.
 *
 * # Safety
 * `x` must hold `n·d` doubles, `z` `n` doubles and `w_hat` `d` doubles.
 */
enum CoarseStatus coarse_friction_estimate(size_t d,
                                           size_t n,
                                           const double *x,
                                           const double *z,
                                           enum CoarseFrictionKind kind,
                                           double parameter,
                                           double c_bound,
                                           double eps,
                                           double alpha,
                                           uint64_t seed,
                                           double *w_hat);

/**
 * Variance ratio of a named family (`gaussian`, `laplace`, `beta`,
 * `quartic`, default parameters) truncated to `[lo, hi]`.
 *
 * # Safety
 * `family` must be a nul-terminated string; `out` must be writable.
 */
enum CoarseStatus coarse_variance_ratio(const char *family,
                                        double lo,
                                        double hi,
                                        size_t n,
                                        uint64_t seed,
                                        struct CoarseVarianceRatio *out_ptr);

/**
 * Structural identifiability of `partition` from `n_cells` observations
 * at `mu_star`. For a non-identifiable verdict the slab direction is
 * written to `direction` (`dim` doubles, may be null).
 *
 * # Safety
 * `partition` must be live; `mu_star` must hold `dim` doubles.
 */
enum CoarseStatus coarse_identify(const struct CoarsePartition *partition,
                                  const double *mu_star,
                                  size_t dim,
                                  size_t n_cells,
                                  uint64_t seed,
                                  enum CoarseVerdict *verdict,
                                  double *direction);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COARSE_H */
