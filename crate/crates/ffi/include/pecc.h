#ifndef PECC_H
#define PECC_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PeccStatus {
  PECC_STATUS_OK = 0,
  PECC_STATUS_NULL_POINTER = 1,
  PECC_STATUS_INVALID_ARGUMENT = 2,
  PECC_STATUS_PARSE = 3,
  PECC_STATUS_IO = 4,
  // The container adjustment ended without a feasible layout.
  PECC_STATUS_NOT_CONVERGED = 5,
  PECC_STATUS_NO_FEASIBLE_SOLUTION = 6,
  PECC_STATUS_PANIC = 7,
} PeccStatus;

typedef enum PeccStrategy {
  PECC_STRATEGY_SECTOR = 0,
  PECC_STRATEGY_ANNULUS = 1,
  PECC_STRATEGY_FENCE = 2,
  PECC_STRATEGY_RANDOM = 3,
} PeccStrategy;

// Opaque solution: layout, container radius and energy.
typedef struct PeccSolution PeccSolution;

// Search settings shared by the optimizing entry points.
typedef struct PeccSolveOptions {
  // Batch count; 0 picks 3 for n <= 320 and 5 otherwise.
  uint32_t k;
  // One of the `PeccStrategy` values.
  uint32_t strategy;
  uint32_t max_iter;
  uint32_t s_iter;
  double l_cut;
  // Wall-clock budget for `pecc_solve`, used when `cutoff_cycles` is 0.
  double cutoff_seconds;
  // Search/adjust cycles for `pecc_solve`; nonzero makes runs reproducible.
  uint64_t cutoff_cycles;
  uint64_t seed;
} PeccSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into this library from the same thread.
const char *pecc_last_error_message(void);

struct PeccSolveOptions pecc_solve_options_default(void);

// Elastic energy of `n` circles at `coords` in a container of `radius`.
enum PeccStatus pecc_total_energy(const double *coords,
                                  size_t n,
                                  double radius,
                                  double *out_energy);

// Whether every overlap and container excess is at most `tol`.
enum PeccStatus pecc_check_feasibility(const double *coords,
                                       size_t n,
                                       double radius,
                                       double tol,
                                       bool *out_feasible);

// Batched BFGS from `coords` at a fixed radius; writes `2n` doubles.
// `options` may be null for defaults.
enum PeccStatus pecc_gbo_minimize(const double *coords,
                                  size_t n,
                                  double radius,
                                  const struct PeccSolveOptions *options,
                                  double *out_coords);

// Shrinks the container around `coords`. On `NotConverged` the best
// infeasible solution is still stored in `out`; free it in both cases.
enum PeccStatus pecc_adjust_container(const double *coords,
                                      size_t n,
                                      double radius,
                                      struct PeccSolution **out);

// Perturbation search for a zero-energy layout of `n` circles at `radius`.
enum PeccStatus pecc_sed(size_t n,
                         double radius,
                         const struct PeccSolveOptions *options,
                         double *out_coords,
                         double *out_energy);

// Full search for a small container radius, starting from `baseline_radius`.
enum PeccStatus pecc_solve(size_t n,
                           double baseline_radius,
                           const struct PeccSolveOptions *options,
                           struct PeccSolution **out);

// Builds a solution handle from explicit coordinates and radius.
enum PeccStatus pecc_solution_new(const double *coords,
                                  size_t n,
                                  double radius,
                                  struct PeccSolution **out);

// Reads a solution file (`n R` header, then one `x y` line per circle).
enum PeccStatus pecc_solution_read(const char *path, struct PeccSolution **out);

enum PeccStatus pecc_solution_write(const struct PeccSolution *solution, const char *path);

// Number of circles, or 0 for a null handle.
size_t pecc_solution_n(const struct PeccSolution *solution);

// Container radius, or NaN for a null handle.
double pecc_solution_radius(const struct PeccSolution *solution);

// Elastic energy, or NaN for a null handle.
double pecc_solution_energy(const struct PeccSolution *solution);

// Copies the `2n` coordinates into `out`, which holds `len` doubles.
enum PeccStatus pecc_solution_coords(const struct PeccSolution *solution, double *out, size_t len);

// Releases a handle; null is ignored.
void pecc_solution_free(struct PeccSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PECC_H */
