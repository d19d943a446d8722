/* Generated by cbindgen. Do not edit. */

#ifndef LLCP_H
#define LLCP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum LlcpCode {
  LLCP_CODE_OK = 0,
  LLCP_CODE_NULL_ARGUMENT = 1,
  LLCP_CODE_INVALID_UTF8 = 2,
  LLCP_CODE_PARSE = 3,
  LLCP_CODE_NOT_DGP = 4,
  LLCP_CODE_INVALID_SETTINGS = 5,
  LLCP_CODE_INVALID_PROBLEM = 6,
  LLCP_CODE_NOT_FOUND = 7,
  LLCP_CODE_BUFFER_TOO_SMALL = 8,
  LLCP_CODE_PANIC = 99,
} LlcpCode;

/**
 * Solve outcome.
 */
typedef enum LlcpStatus {
  LLCP_STATUS_OPTIMAL = 0,
  LLCP_STATUS_INFEASIBLE = 1,
  LLCP_STATUS_UNBOUNDED = 2,
  LLCP_STATUS_MAX_ITERATIONS = 3,
} LlcpStatus;

/**
 * Parsed problem.
 */
typedef struct LlcpProblem LlcpProblem;

/**
 * Solution together with the problem it answers.
 */
typedef struct LlcpSolution LlcpSolution;

/**
 * Solver parameters. Start from [`llcp_settings_default`].
 */
typedef struct LlcpSettings {
  double mu;
  double tau0;
  double gap_tol;
  double feas_tol;
  uint32_t max_newton;
  uint32_t max_outer;
  double unbounded_threshold;
} LlcpSettings;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *llcp_version(void);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library from this thread.
 */
const char *llcp_last_error_message(void);

/**
 * Parse a problem document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum LlcpCode llcp_problem_parse(const char *text, struct LlcpProblem **out);

/**
 * # Safety
 * `problem` must come from [`llcp_problem_parse`] and not be used again.
 */
void llcp_problem_free(struct LlcpProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_problem_is_dgp(const struct LlcpProblem *problem, bool *out);

/**
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_problem_num_constraints(const struct LlcpProblem *problem, size_t *out);

/**
 * DGP analysis as JSON. Free the result with [`llcp_string_free`].
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_problem_explain_json(const struct LlcpProblem *problem, char **out);

/**
 * Text listing of the canonical log-space program. Free the result with
 * [`llcp_string_free`].
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_problem_canonical_dump(const struct LlcpProblem *problem, char **out);

struct LlcpSettings llcp_settings_default(void);

/**
 * Solve a problem. `settings` may be null for the defaults. A solve that
 * ends infeasible, unbounded, or at the iteration limit still returns
 * `Ok`; inspect [`llcp_solution_status`].
 *
 * # Safety
 * `problem` must be a live handle, `settings` null or valid, and `out`
 * writable.
 */
enum LlcpCode llcp_solve(const struct LlcpProblem *problem,
                         const struct LlcpSettings *settings,
                         struct LlcpSolution **out);

/**
 * # Safety
 * `solution` must come from [`llcp_solve`] and not be used again.
 */
void llcp_solution_free(struct LlcpSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_solution_status(const struct LlcpSolution *solution, enum LlcpStatus *out);

/**
 * Optimal value of the original problem; NaN when there is none.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_solution_optimal_value(const struct LlcpSolution *solution, double *out);

/**
 * Copy the value of variable `name` into `buf` in row-major order.
 * `rows` and `cols` are always written when the variable exists, so a
 * call with a null `buf` reports the shape with `BufferTooSmall`.
 *
 * # Safety
 * `solution` must be a live handle, `name` NUL-terminated, `rows` and
 * `cols` writable, and `buf` null or valid for `len` values.
 */
enum LlcpCode llcp_solution_variable(const struct LlcpSolution *solution,
                                     const char *name,
                                     size_t *rows,
                                     size_t *cols,
                                     double *buf,
                                     size_t len);

/**
 * Copy the dual value of the constraint at position `index` into `buf`
 * in row-major order, with the same shape protocol as
 * [`llcp_solution_variable`].
 *
 * # Safety
 * As for [`llcp_solution_variable`].
 */
enum LlcpCode llcp_solution_dual(const struct LlcpSolution *solution,
                                 size_t index,
                                 size_t *rows,
                                 size_t *cols,
                                 double *buf,
                                 size_t len);

/**
 * The solution in the same JSON layout as `llcp solve --json`. Free the
 * result with [`llcp_string_free`].
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum LlcpCode llcp_solution_to_json(const struct LlcpSolution *solution, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used again.
 */
void llcp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LLCP_H */
