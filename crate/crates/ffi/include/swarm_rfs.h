#ifndef SWARM_RFS_H
#define SWARM_RFS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrfsLoopMode {
  SRFS_LOOP_MODE_TRUE_STATE = 0,
  SRFS_LOOP_MODE_PHD_ESTIMATE = 1,
} SrfsLoopMode;

typedef enum SrfsStatus {
  SRFS_STATUS_OK = 0,
  SRFS_STATUS_NULL_POINTER = 1,
  SRFS_STATUS_INVALID_ARGUMENT = 2,
  SRFS_STATUS_CONFIG = 3,
  SRFS_STATUS_SOLVER = 4,
  SRFS_STATUS_IO = 5,
  SRFS_STATUS_PANIC = 6,
} SrfsStatus;

typedef enum SrfsTimeMode {
  SRFS_TIME_MODE_CONTINUOUS = 0,
  SRFS_TIME_MODE_DISCRETE = 1,
} SrfsTimeMode;

typedef struct SrfsConfig SrfsConfig;

typedef struct SrfsLqrProblem SrfsLqrProblem;

typedef struct SrfsResult SrfsResult;

/**
 * Centralized ILQR baseline of a scenario run. Missing values are NaN.
 */
typedef struct SrfsBaseline {
  size_t ilqr_nnz;
  size_t ilqr_iterations;
  bool ilqr_converged;
  double j_c;
  double distance_reduction;
} SrfsBaseline;

/**
 * One γ of the sweep. When `ok` is false the remaining fields are NaN or 0
 * and the failure text is in [`srfs_last_error`] after the call.
 */
typedef struct SrfsGammaSummary {
  double gamma;
  bool ok;
  size_t nnz;
  double nnz_ratio;
  double j;
  double j_ratio;
  size_t edges;
  double distance_reduction;
} SrfsGammaSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next `srfs_*` call on the same thread.
 */
const char *srfs_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library and not yet freed.
 */
void srfs_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SrfsStatus srfs_config_default(struct SrfsConfig **out);

/**
 * Parse a JSON config; unknown keys are rejected.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SrfsStatus srfs_config_from_json(const char *json, struct SrfsConfig **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SrfsStatus srfs_config_load(const char *path, struct SrfsConfig **out);

/**
 * Serialize the config; release the string with [`srfs_string_free`].
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum SrfsStatus srfs_config_to_json(const struct SrfsConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum SrfsStatus srfs_config_set_seed(struct SrfsConfig *cfg, uint64_t seed);

/**
 * Replace the γ list; the config is left unchanged if the list is invalid.
 *
 * # Safety
 * `cfg` must be a live handle and `gammas` point to `len` values.
 */
enum SrfsStatus srfs_config_set_gammas(struct SrfsConfig *cfg, const double *gammas, size_t len);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum SrfsStatus srfs_config_set_loop_mode(struct SrfsConfig *cfg, enum SrfsLoopMode mode);

/**
 * # Safety
 * `cfg` must be null or a live handle, which is invalid afterwards.
 */
void srfs_config_free(struct SrfsConfig *cfg);

/**
 * Run ILQR, the γ sweep and the closed-loop rollouts.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum SrfsStatus srfs_run(const struct SrfsConfig *cfg, struct SrfsResult **out);

/**
 * # Safety
 * `res` must be null or a live handle, which is invalid afterwards.
 */
void srfs_result_free(struct SrfsResult *res);

/**
 * # Safety
 * `res` must be a live handle and `out` a valid pointer.
 */
enum SrfsStatus srfs_result_baseline(const struct SrfsResult *res, struct SrfsBaseline *out);

/**
 * Number of γ entries; 0 for a null handle.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t srfs_result_gamma_count(const struct SrfsResult *res);

/**
 * # Safety
 * `res` must be a live handle and `out` a valid pointer.
 */
enum SrfsStatus srfs_result_gamma(const struct SrfsResult *res,
                                  size_t index,
                                  struct SrfsGammaSummary *out);

/**
 * Shape of the gain matrices (controls × states).
 *
 * # Safety
 * `res` must be a live handle; `rows` and `cols` valid pointers.
 */
enum SrfsStatus srfs_result_gain_shape(const struct SrfsResult *res, size_t *rows, size_t *cols);

/**
 * Copy the polished gain of γ entry `index` (u = −Fx), column-major.
 *
 * # Safety
 * `res` must be a live handle and `out` hold `len` values.
 */
enum SrfsStatus srfs_result_gain(const struct SrfsResult *res,
                                 size_t index,
                                 double *out,
                                 size_t len);

/**
 * Copy the centralized ILQR static gain (u = −Fx), column-major.
 *
 * # Safety
 * `res` must be a live handle and `out` hold `len` values.
 */
enum SrfsStatus srfs_result_baseline_gain(const struct SrfsResult *res, double *out, size_t len);

/**
 * Summary JSON; release the string with [`srfs_string_free`].
 *
 * # Safety
 * `res` must be a live handle and `out` a valid pointer.
 */
enum SrfsStatus srfs_result_summary_json(const struct SrfsResult *res, char **out);

/**
 * Write all export files into `dir`, creating it if needed.
 *
 * # Safety
 * `res` must be a live handle and `dir` a NUL-terminated string.
 */
enum SrfsStatus srfs_result_export(const struct SrfsResult *res, const char *dir);

/**
 * Solve `AᵀP + PA = −Q` (continuous) or `AᵀPA − P = −Q` (discrete).
 *
 * # Safety
 * `a`, `q` and `out` must each hold `n·n` values.
 */
enum SrfsStatus srfs_solve_lyapunov(size_t n,
                                    const double *a,
                                    const double *q,
                                    enum SrfsTimeMode mode,
                                    double *out);

/**
 * Solve `MX + XN = C` with `M` m×m, `N` n×n and `C`, `X` m×n.
 *
 * # Safety
 * Each pointer must hold the number of values its shape implies.
 */
enum SrfsStatus srfs_solve_sylvester(size_t m,
                                     size_t n,
                                     const double *mm,
                                     const double *nn,
                                     const double *c,
                                     double *out);

/**
 * Zero-order-hold discretization of `(Ac, Bc)` with `Ac` n×n, `Bc` n×m.
 *
 * # Safety
 * `ac`, `ad` hold `n·n` values; `bc`, `bd` hold `n·m` values.
 */
enum SrfsStatus srfs_zoh_discretize(size_t n,
                                    size_t m,
                                    const double *ac,
                                    const double *bc,
                                    double dt,
                                    double *ad,
                                    double *bd);

/**
 * Density of `N(mean, cov)` at `x` in `dim` dimensions.
 *
 * # Safety
 * `x`, `mean` hold `dim` values, `cov` `dim·dim`; `out` is valid.
 */
enum SrfsStatus srfs_eval_gaussian(size_t dim,
                                   const double *x,
                                   const double *mean,
                                   const double *cov,
                                   double *out);

/**
 * LQR problem with `A` n×n, `B` n×m, `B2` n×p, `Q` n×n and `R` m×m.
 *
 * # Safety
 * Each matrix pointer must hold the number of values its shape implies.
 */
enum SrfsStatus srfs_lqr_problem_new(size_t n,
                                     size_t m,
                                     size_t p,
                                     const double *a,
                                     const double *b,
                                     const double *b2,
                                     const double *q,
                                     const double *r,
                                     enum SrfsTimeMode mode,
                                     struct SrfsLqrProblem **out);

/**
 * # Safety
 * `prob` must be null or a live handle, which is invalid afterwards.
 */
void srfs_lqr_problem_free(struct SrfsLqrProblem *prob);

/**
 * Optimal centralized gain (u = −Fx), written as an m×n column-major matrix.
 *
 * # Safety
 * `prob` must be a live handle and `out` hold `len` values.
 */
enum SrfsStatus srfs_lqr_centralized_gain(const struct SrfsLqrProblem *prob,
                                          double *out,
                                          size_t len);

/**
 * Closed-loop cost `J(F)`; fails if `F` does not stabilize the plant.
 *
 * # Safety
 * `prob` must be a live handle, `f` hold m·n values and `out` be valid.
 */
enum SrfsStatus srfs_lqr_cost(const struct SrfsLqrProblem *prob, const double *f, double *out);

/**
 * Sparsity-promoting ADMM with default options from the stabilizing `f0`.
 * Writes the gain restricted to its pattern and the number of nonzeros.
 *
 * # Safety
 * `prob` must be a live handle, `f0` hold m·n values, `out` hold `len`
 * values and `nnz` be null or valid.
 */
enum SrfsStatus srfs_lqr_sparsify(const struct SrfsLqrProblem *prob,
                                  double gamma,
                                  const double *f0,
                                  double *out,
                                  size_t len,
                                  size_t *nnz);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWARM_RFS_H */
