#ifndef NOISYMEM_H
#define NOISYMEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum NmStatus {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_POINTER = 1,
  NM_STATUS_INVALID_PARAMETER = 2,
  NM_STATUS_MODEL_ERROR = 3,
  NM_STATUS_NUMERICAL_BLOWUP = 4,
  NM_STATUS_BUFFER_TOO_SMALL = 5,
  NM_STATUS_PANIC = 6,
} NmStatus;

typedef struct NmConvergenceReport NmConvergenceReport;

typedef struct NmGrid NmGrid;

typedef struct NmMseCurve NmMseCurve;

typedef struct NmPath NmPath;

typedef struct NmProblem NmProblem;

typedef struct NmTrajectory NmTrajectory;

/**
 * `b(t, x, z)` or `σ(t, x, z)`.
 */
typedef double (*NmCoefficientFn)(void *user_data, double t, double x, double z);

/**
 * `ξ(t)` on `[−δ, 0]`.
 */
typedef double (*NmInitialFn)(void *user_data, double t);

/**
 * `φ(t, s)`.
 */
typedef double (*NmKernelFn)(void *user_data, double t, double s);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *nm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nm_version(void);

enum NmStatus nm_problem_paper_example(double delta, struct NmProblem **out);

enum NmStatus nm_problem_pure_memory_drift(double delta, double horizon, struct NmProblem **out);

/**
 * Problem with C callbacks. When `kernel` is null the memory kernel is the
 * constant `kernel_constant`. `user_data` is passed to every callback and
 * must outlive the returned handle.
 */
enum NmStatus nm_problem_custom(NmCoefficientFn drift,
                                NmCoefficientFn diffusion,
                                NmInitialFn initial,
                                NmKernelFn kernel,
                                double kernel_constant,
                                void *user_data,
                                double delta,
                                double horizon,
                                struct NmProblem **out);

void nm_problem_free(struct NmProblem *problem);

enum NmStatus nm_grid_build(double delta, double horizon, size_t n_steps, struct NmGrid **out);

/**
 * Step size, or NaN for a null handle.
 */
double nm_grid_dt(const struct NmGrid *grid);

/**
 * Number of nodes on `[−δ, T]`, or 0 for a null handle.
 */
size_t nm_grid_nodes_len(const struct NmGrid *grid);

enum NmStatus nm_grid_nodes(const struct NmGrid *grid, double *buf, size_t len);

/**
 * Number of positive nodes `t_0 = 0, …, t_N = T`, or 0 for a null handle.
 */
size_t nm_grid_times_len(const struct NmGrid *grid);

enum NmStatus nm_grid_times(const struct NmGrid *grid, double *buf, size_t len);

void nm_grid_free(struct NmGrid *grid);

enum NmStatus nm_path_sample(const struct NmGrid *grid, uint64_t seed, struct NmPath **out);

/**
 * Path from `len` increments, one per interval between consecutive nodes.
 */
enum NmStatus nm_path_from_increments(const struct NmGrid *grid,
                                      const double *increments,
                                      size_t len,
                                      struct NmPath **out);

/**
 * Sums every `factor` consecutive increments of `fine`.
 */
enum NmStatus nm_path_coarsen(const struct NmPath *fine, size_t factor, struct NmPath **out);

size_t nm_path_values_len(const struct NmPath *path);

enum NmStatus nm_path_values(const struct NmPath *path, double *buf, size_t len);

size_t nm_path_increments_len(const struct NmPath *path);

enum NmStatus nm_path_increments(const struct NmPath *path, double *buf, size_t len);

void nm_path_free(struct NmPath *path);

enum NmStatus nm_euler_solve(const struct NmProblem *problem,
                             const struct NmGrid *grid,
                             const struct NmPath *path,
                             struct NmTrajectory **out);

/**
 * Same as [`nm_euler_solve`] but resums every memory window from scratch.
 */
enum NmStatus nm_euler_solve_naive(const struct NmProblem *problem,
                                   const struct NmGrid *grid,
                                   const struct NmPath *path,
                                   struct NmTrajectory **out);

/**
 * Number of states `X_0, …, X_N`.
 */
size_t nm_trajectory_len(const struct NmTrajectory *tr);

enum NmStatus nm_trajectory_states(const struct NmTrajectory *tr, double *buf, size_t len);

/**
 * Memories `Z_0, …, Z_N`; same length as the states.
 */
enum NmStatus nm_trajectory_memories(const struct NmTrajectory *tr, double *buf, size_t len);

void nm_trajectory_free(struct NmTrajectory *tr);

/**
 * Closed-form `X(t_i)` of the built-in example at every positive node
 * (`N + 1` values). Requires `T = δ`.
 */
enum NmStatus nm_exact_solve(double delta,
                             const struct NmGrid *grid,
                             const struct NmPath *path,
                             double *buf,
                             size_t len);

/**
 * Per-node MSE against the closed form; paths are drawn `refinement` times
 * finer than `grid` and coarsened.
 */
enum NmStatus nm_estimate_mse(const struct NmProblem *problem,
                              const struct NmGrid *grid,
                              size_t n_paths,
                              uint64_t base_seed,
                              size_t refinement,
                              struct NmMseCurve **out);

size_t nm_mse_curve_len(const struct NmMseCurve *curve);

enum NmStatus nm_mse_curve_times(const struct NmMseCurve *curve, double *buf, size_t len);

enum NmStatus nm_mse_curve_mse(const struct NmMseCurve *curve, double *buf, size_t len);

enum NmStatus nm_mse_curve_std_errors(const struct NmMseCurve *curve, double *buf, size_t len);

void nm_mse_curve_free(struct NmMseCurve *curve);

/**
 * Terminal MSE for each of the `len` step counts in `step_counts`. The
 * reference is evaluated `reference_refinement` times finer than the finest
 * Euler grid.
 */
enum NmStatus nm_convergence_study(const struct NmProblem *problem,
                                   const size_t *step_counts,
                                   size_t len,
                                   size_t n_paths,
                                   uint64_t base_seed,
                                   size_t reference_refinement,
                                   struct NmConvergenceReport **out);

/**
 * Number of step sizes in the report.
 */
size_t nm_convergence_len(const struct NmConvergenceReport *report);

/**
 * Step sizes, largest first.
 */
enum NmStatus nm_convergence_dts(const struct NmConvergenceReport *report, double *buf, size_t len);

enum NmStatus nm_convergence_mse(const struct NmConvergenceReport *report, double *buf, size_t len);

enum NmStatus nm_convergence_std_errors(const struct NmConvergenceReport *report,
                                        double *buf,
                                        size_t len);

/**
 * Fitted slope of log MSE against log Δt and its standard error (NaN with
 * only two step sizes).
 */
enum NmStatus nm_convergence_order(const struct NmConvergenceReport *report,
                                   double *order,
                                   double *std_error);

void nm_convergence_free(struct NmConvergenceReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOISYMEM_H */
