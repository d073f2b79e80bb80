#ifndef FOLDQ_H
#define FOLDQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call. The nonzero values match the command-line exit codes where they
 * overlap.
 */
typedef enum FoldqStatus {
  FOLDQ_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or another misuse of the API.
   */
  FOLDQ_STATUS_INVALID_ARGUMENT = 1,
  FOLDQ_STATUS_VALIDATION = 2,
  FOLDQ_STATUS_CAPACITY = 3,
  FOLDQ_STATUS_STAGE_FAILURE = 4,
  /**
   * The library panicked; the handles passed in should not be used again.
   */
  FOLDQ_STATUS_PANIC = 5,
} FoldqStatus;

typedef struct FoldqIsing FoldqIsing;

typedef struct FoldqPolynomial FoldqPolynomial;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *foldq_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *foldq_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void foldq_string_free(char *s);

/**
 * Loads a bundled polynomial fixture such as `exp6`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoldqStatus foldq_polynomial_fixture(const char *name, struct FoldqPolynomial **out);

/**
 * Parses the text form, e.g. `-q2 + 2q1q2 + 2q2q3 - 3q1q2q3`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoldqStatus foldq_polynomial_parse(const char *text, struct FoldqPolynomial **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoldqStatus foldq_polynomial_from_json(const char *json, struct FoldqPolynomial **out);

/**
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum FoldqStatus foldq_polynomial_to_json(const struct FoldqPolynomial *p, char **out);

/**
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum FoldqStatus foldq_polynomial_to_text(const struct FoldqPolynomial *p, char **out);

/**
 * Number of variables, 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
uintptr_t foldq_polynomial_arity(const struct FoldqPolynomial *p);

/**
 * Exact value at an assignment (bit `i - 1` of `mask` is `q_i`) as `num / den`.
 *
 * # Safety
 * `p` must be a live handle, `num` and `den` valid pointers.
 */
enum FoldqStatus foldq_polynomial_evaluate(const struct FoldqPolynomial *p,
                                           uint64_t mask,
                                           int64_t *num,
                                           int64_t *den);

/**
 * Fixes `vars[k]` (1-based) to `values[k]` (0 or 1). With `relabel` the remaining
 * variables are renumbered from 1.
 *
 * # Safety
 * `p` must be a live handle, `vars` and `values` arrays of length `len`, `out` valid.
 */
enum FoldqStatus foldq_polynomial_fix(const struct FoldqPolynomial *p,
                                      const uintptr_t *vars,
                                      const uint8_t *values,
                                      uintptr_t len,
                                      bool relabel,
                                      struct FoldqPolynomial **out);

/**
 * Reduces to degree two. `plan` is null for the greedy plan with automatic deltas,
 * or a list such as `q1q2=6,q3q4=4` (a pair without `=` gets the automatic delta).
 * The result has the ancillas appended after the original variables.
 *
 * # Safety
 * `p` must be a live handle, `plan` null or a NUL-terminated string, `out` valid.
 */
enum FoldqStatus foldq_polynomial_quadratize(const struct FoldqPolynomial *p,
                                             const char *plan,
                                             struct FoldqPolynomial **out);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void foldq_polynomial_free(struct FoldqPolynomial *p);

/**
 * Normalized spin model of a polynomial of degree at most two.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum FoldqStatus foldq_ising_from_polynomial(const struct FoldqPolynomial *p,
                                             struct FoldqIsing **out);

/**
 * Loads a bundled Ising fixture such as `exp6_ising`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoldqStatus foldq_ising_fixture(const char *name, struct FoldqIsing **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoldqStatus foldq_ising_from_json(const char *json, struct FoldqIsing **out);

/**
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum FoldqStatus foldq_ising_to_json(const struct FoldqIsing *m, char **out);

/**
 * Number of spins, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
uintptr_t foldq_ising_num_spins(const struct FoldqIsing *m);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void foldq_ising_free(struct FoldqIsing *m);

/**
 * All ground states by enumeration, as a JSON sample set.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum FoldqStatus foldq_solve_exhaustive(const struct FoldqIsing *m, char **out);

/**
 * Simulated annealing on a geometric beta schedule, as a JSON sample set. The result
 * depends only on the arguments.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum FoldqStatus foldq_solve_sa(const struct FoldqIsing *m,
                                uintptr_t reads,
                                uintptr_t sweeps,
                                double beta_min,
                                double beta_max,
                                uint64_t seed,
                                char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLDQ_H */
