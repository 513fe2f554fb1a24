/* C interface for the sdae solver. Generated by cbindgen; do not edit. */

#ifndef SDAE_H
#define SDAE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Time-stepping scheme selector.
 */
typedef enum SdaeScheme {
  /**
   * Semi-implicit scheme with tamed drift on the original variables.
   */
  SDAE_SCHEME_DIRECT_TAMED = 0,
  /**
   * Equivalent scheme propagating differential and algebraic parts
   * separately.
   */
  SDAE_SCHEME_DUAL_TAMED = 1,
  /**
   * Semi-implicit scheme without taming; explodes on stiff drift.
   */
  SDAE_SCHEME_DIRECT_UNTAMED = 2,
} SdaeScheme;

/**
 * Status code returned by every fallible function.
 */
typedef enum SdaeStatus {
  /**
   * The call succeeded.
   */
  SDAE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SDAE_STATUS_NULL_POINTER = 1,
  /**
   * The model name does not match any built-in problem.
   */
  SDAE_STATUS_UNKNOWN_MODEL = 2,
  /**
   * An argument was out of range, or the question does not apply
   * (for example asking for the slope of a report that has none).
   */
  SDAE_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The computation failed numerically (singular matrix, invalid
   * grid, or an internal error).
   */
  SDAE_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * The trajectory left the finite range; partial results are
   * still available.
   */
  SDAE_STATUS_DIVERGED = 5,
  /**
   * Validation ran to completion and the model failed it; the
   * report out-parameter is still filled in.
   */
  SDAE_STATUS_VALIDATION_FAILED = 6,
  /**
   * A caller-provided buffer is too small.
   */
  SDAE_STATUS_BUFFER_TOO_SMALL = 7,
} SdaeStatus;

/**
 * Opaque problem handle. Create with `sdae_problem_builtin`, release
 * with `sdae_problem_free`.
 */
typedef struct SdaeProblemHandle SdaeProblemHandle;

/**
 * Opaque convergence report handle returned by `sdae_converge`.
 * Release with `sdae_report_free`.
 */
typedef struct SdaeReportHandle SdaeReportHandle;

/**
 * Opaque trajectory handle returned by `sdae_simulate`. Release with
 * `sdae_trajectory_free`.
 */
typedef struct SdaeTrajectoryHandle SdaeTrajectoryHandle;

/**
 * Flattened result of `sdae_validate`.
 */
typedef struct SdaeValidation {
  /**
   * Noise stays out of the constraint equations.
   */
  bool index1_noise_ok;
  /**
   * The constraint system is uniquely solvable along the horizon.
   */
  bool constraint_solvable_ok;
  /**
   * Largest one-sided Lipschitz quotient seen while probing.
   */
  double probed_one_sided_constant;
  /**
   * Largest monotonicity quotient seen while probing.
   */
  double probed_monotone_constant;
  /**
   * Random states actually probed.
   */
  uintptr_t samples_used;
  /**
   * Worst relative violation of the index-1 noise condition.
   */
  double worst_violation;
  /**
   * Time at which the worst violation occurred.
   */
  double worst_violation_t;
} SdaeValidation;

/**
 * One row of a convergence report.
 */
typedef struct SdaeConvergenceRow {
  /**
   * Coarse grid resolution.
   */
  uintptr_t n;
  /**
   * Step size at that resolution.
   */
  double h;
  /**
   * Measured strong error.
   */
  double error_p;
  /**
   * Monte Carlo standard error of `error_p` (NaN when fewer than
   * two paths were usable).
   */
  double std_error;
  /**
   * Paths that diverged and were excluded at this resolution.
   */
  uintptr_t diverged_paths;
  /**
   * Paths that entered the error estimate.
   */
  uintptr_t used_paths;
} SdaeConvergenceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *sdae_version(void);

/**
 * Returns a static human-readable message for a status code.
 */
const char *sdae_status_message(enum SdaeStatus status);

/**
 * Looks up a built-in model by NUL-terminated name and hands back an
 * owned problem handle through `out`.
 *
 * # Safety
 * `name` must point to a NUL-terminated string and `out` to a valid
 * pointer slot; on `SDAE_STATUS_OK` the caller owns the handle and must
 * release it with `sdae_problem_free`.
 */
enum SdaeStatus sdae_problem_builtin(const char *name, struct SdaeProblemHandle **out);

/**
 * Releases a problem handle; a null handle is ignored.
 *
 * # Safety
 * `problem` must be a handle obtained from this library that has not
 * been freed before.
 */
void sdae_problem_free(struct SdaeProblemHandle *problem);

/**
 * Writes the state dimension of the problem to `out`.
 *
 * # Safety
 * `problem` must be a live handle from this library; `out` must be
 * valid for one `size_t` write.
 */
enum SdaeStatus sdae_problem_dim(const struct SdaeProblemHandle *problem, uintptr_t *out);

/**
 * Writes the number of driving Wiener components to `out`.
 *
 * # Safety
 * As for [`sdae_problem_dim`].
 */
enum SdaeStatus sdae_problem_noise_dim(const struct SdaeProblemHandle *problem, uintptr_t *out);

/**
 * Writes the time horizon to `out`.
 *
 * # Safety
 * `problem` must be a live handle from this library; `out` must be
 * valid for one `double` write.
 */
enum SdaeStatus sdae_problem_horizon(const struct SdaeProblemHandle *problem, double *out);

/**
 * Runs the index-1 structure checks and drift probes on `samples`
 * random states and fills `out`.
 *
 * Returns `SDAE_STATUS_OK` when the model passes,
 * `SDAE_STATUS_VALIDATION_FAILED` (with `out` still filled) when it
 * does not.
 *
 * # Safety
 * `problem` must be a live handle from this library; `out` must be
 * valid for one `SdaeValidation` write.
 */
enum SdaeStatus sdae_validate(const struct SdaeProblemHandle *problem,
                              uintptr_t samples,
                              uint64_t seed,
                              struct SdaeValidation *out);

/**
 * Integrates one trajectory on an equidistant grid with `steps` steps,
 * driven by the Wiener path identified by `(seed, path_index)`, and
 * hands back an owned trajectory handle through `out`.
 *
 * Returns `SDAE_STATUS_DIVERGED` when the iterates left the finite
 * range; the handle is still written and carries the frozen partial
 * trajectory.
 *
 * # Safety
 * `problem` must be a live handle from this library and `out` a valid
 * pointer slot; on `SDAE_STATUS_OK` or `SDAE_STATUS_DIVERGED` the
 * caller owns the handle and must release it with
 * `sdae_trajectory_free`.
 */
enum SdaeStatus sdae_simulate(const struct SdaeProblemHandle *problem,
                              enum SdaeScheme scheme,
                              uintptr_t steps,
                              uint64_t seed,
                              uint64_t path_index,
                              struct SdaeTrajectoryHandle **out);

/**
 * Releases a trajectory handle; a null handle is ignored.
 *
 * # Safety
 * `trajectory` must be a handle obtained from this library that has
 * not been freed before.
 */
void sdae_trajectory_free(struct SdaeTrajectoryHandle *trajectory);

/**
 * Writes the number of steps (the trajectory holds `steps + 1` nodes).
 *
 * # Safety
 * `trajectory` must be a live handle from this library; `out` must be
 * valid for one `size_t` write.
 */
enum SdaeStatus sdae_trajectory_steps(const struct SdaeTrajectoryHandle *trajectory,
                                      uintptr_t *out);

/**
 * Writes the state dimension.
 *
 * # Safety
 * As for [`sdae_trajectory_steps`].
 */
enum SdaeStatus sdae_trajectory_dim(const struct SdaeTrajectoryHandle *trajectory, uintptr_t *out);

/**
 * Writes whether the trajectory diverged.
 *
 * # Safety
 * `trajectory` must be a live handle from this library; `out` must be
 * valid for one `bool` write.
 */
enum SdaeStatus sdae_trajectory_diverged(const struct SdaeTrajectoryHandle *trajectory, bool *out);

/**
 * Writes the first step at which the iterate became non-finite.
 * Returns `SDAE_STATUS_INVALID_ARGUMENT` when the trajectory never
 * diverged.
 *
 * # Safety
 * As for [`sdae_trajectory_steps`].
 */
enum SdaeStatus sdae_trajectory_diverged_at(const struct SdaeTrajectoryHandle *trajectory,
                                            uintptr_t *out);

/**
 * Copies the state at grid node `node` (0 ..= steps) into `buffer`.
 * `len` is the buffer capacity in doubles and must be at least the
 * state dimension.
 *
 * # Safety
 * `trajectory` must be a live handle from this library; `buffer` must
 * be valid for `len` `double` writes.
 */
enum SdaeStatus sdae_trajectory_state(const struct SdaeTrajectoryHandle *trajectory,
                                      uintptr_t node,
                                      double *buffer,
                                      uintptr_t len);

/**
 * Runs the Monte Carlo strong-convergence measurement and hands back
 * an owned report handle through `out`.
 *
 * `n_list` points to `n_levels` strictly increasing power-of-two
 * resolutions dividing `n_ref`; `p` is the moment exponent.
 *
 * # Safety
 * `problem` must be a live handle from this library; `n_list` must be
 * valid for `n_levels` `size_t` reads; `out` must be a valid pointer
 * slot. On `SDAE_STATUS_OK` the caller owns the handle and must
 * release it with `sdae_report_free`.
 */
enum SdaeStatus sdae_converge(const struct SdaeProblemHandle *problem,
                              enum SdaeScheme scheme,
                              uintptr_t n_ref,
                              const uintptr_t *n_list,
                              uintptr_t n_levels,
                              uintptr_t paths,
                              uint32_t p,
                              uint64_t seed,
                              struct SdaeReportHandle **out);

/**
 * Releases a report handle; a null handle is ignored.
 *
 * # Safety
 * `report` must be a handle obtained from this library that has not
 * been freed before.
 */
void sdae_report_free(struct SdaeReportHandle *report);

/**
 * Writes the number of measured resolutions.
 *
 * # Safety
 * `report` must be a live handle from this library; `out` must be
 * valid for one `size_t` write.
 */
enum SdaeStatus sdae_report_rows(const struct SdaeReportHandle *report, uintptr_t *out);

/**
 * Writes the fitted convergence slope. Returns
 * `SDAE_STATUS_INVALID_ARGUMENT` when the report has no fit (fewer
 * than two usable resolutions).
 *
 * # Safety
 * `report` must be a live handle from this library; `out` must be
 * valid for one `double` write.
 */
enum SdaeStatus sdae_report_slope(const struct SdaeReportHandle *report, double *out);

/**
 * Copies row `index` of the report into `out`.
 *
 * # Safety
 * `report` must be a live handle from this library; `out` must be
 * valid for one `SdaeConvergenceRow` write.
 */
enum SdaeStatus sdae_report_row(const struct SdaeReportHandle *report,
                                uintptr_t index,
                                struct SdaeConvergenceRow *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SDAE_H */
