#ifndef LEP_H
#define LEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LepStatus {
  LEP_STATUS_OK = 0,
  LEP_STATUS_NULL_POINTER = 1,
  LEP_STATUS_INVALID_UTF8 = 2,
  LEP_STATUS_PARSE_ERROR = 3,
  LEP_STATUS_INVALID_ARGUMENT = 4,
  LEP_STATUS_HYPOTHESIS_FAILED = 5,
  LEP_STATUS_SOLVE_ERROR = 6,
  LEP_STATUS_BUFFER_TOO_SMALL = 7,
  LEP_STATUS_PANIC = 8,
} LepStatus;

/**
 * A parsed complex with its optional field sections.
 */
typedef struct LepComplex LepComplex;

/**
 * A solved field together with its graph.
 */
typedef struct LepSolution LepSolution;

/**
 * Parameters for [`lep_solve`] and [`lep_distance`].
 */
typedef struct LepSolveOptions {
  double h;
  uint32_t ring;
  /**
   * Constant weight used when `use_file_fields` is false or the file has none.
   */
  double f_const;
  /**
   * Constant boundary value used when `use_file_fields` is false or the file has none.
   */
  double g_const;
  bool use_file_fields;
  bool override_strict_subsolution;
  bool override_boundary_compat;
} LepSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *lep_last_error(void);

struct LepSolveOptions lep_solve_options_default(void);

/**
 * Parses `.lep` text into a new handle stored in `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LepStatus lep_complex_parse(const char *text, struct LepComplex **out);

/**
 * # Safety
 * `c` must be null or a handle from [`lep_complex_parse`] not yet freed.
 */
void lep_complex_free(struct LepComplex *c);

/**
 * Runs the axiom checks; `*violations` receives the number of violated rules.
 *
 * # Safety
 * Pointers must be valid; `c` must be a live handle.
 */
enum LepStatus lep_complex_validate(const struct LepComplex *c, bool *valid, size_t *violations);

/**
 * # Safety
 * `c` must be a live handle and `out` valid.
 */
enum LepStatus lep_complex_branch_count(const struct LepComplex *c, size_t *out);

/**
 * Solves the Dirichlet problem; the new solution handle is stored in `*out`.
 *
 * # Safety
 * `c` must be a live handle; `opts` null (defaults) or valid; `out` valid.
 */
enum LepStatus lep_solve(const struct LepComplex *c,
                         const struct LepSolveOptions *opts,
                         struct LepSolution **out);

/**
 * # Safety
 * `s` must be null or a handle from [`lep_solve`] not yet freed.
 */
void lep_solution_free(struct LepSolution *s);

/**
 * # Safety
 * `s` must be a live handle and `out` valid.
 */
enum LepStatus lep_solution_node_count(const struct LepSolution *s, size_t *out);

/**
 * Copies the node values into `buf`, which must hold `len >= node count` doubles.
 *
 * # Safety
 * `s` must be a live handle and `buf` valid for `len` writes.
 */
enum LepStatus lep_solution_values(const struct LepSolution *s, double *buf, size_t len);

/**
 * Field value at a branch-local point.
 *
 * # Safety
 * `s` must be a live handle and `out` valid.
 */
enum LepStatus lep_solution_value_at(const struct LepSolution *s,
                                     uint32_t branch,
                                     double u,
                                     double v,
                                     double *out);

/**
 * Action distance between two branch-local points.
 *
 * # Safety
 * `c` must be a live handle; `opts` null (defaults) or valid; `out` valid.
 */
enum LepStatus lep_distance(const struct LepComplex *c,
                            const struct LepSolveOptions *opts,
                            uint32_t from_branch,
                            double from_u,
                            double from_v,
                            uint32_t to_branch,
                            double to_u,
                            double to_v,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEP_H */
