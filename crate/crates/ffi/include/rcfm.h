#ifndef RCFM_H
#define RCFM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. `RCFM_STATUS_OK` is zero.
 */
typedef enum RcfmStatus {
  RCFM_STATUS_OK = 0,
  RCFM_STATUS_NULL_POINTER = 1,
  RCFM_STATUS_INVALID_UTF8 = 2,
  RCFM_STATUS_PARSE = 3,
  RCFM_STATUS_EVAL = 4,
  RCFM_STATUS_JSON = 5,
  RCFM_STATUS_NOT_FREDHOLM = 6,
  RCFM_STATUS_TRUNCATION_LIMIT = 7,
  RCFM_STATUS_UNCERTIFIED = 8,
  RCFM_STATUS_FREDHOLM = 9,
  RCFM_STATUS_EXTENSION = 10,
  RCFM_STATUS_INVALID_ARGUMENT = 11,
  RCFM_STATUS_PANIC = 12,
} RcfmStatus;

/**
 * An exact row-and-column-finite matrix.
 */
typedef struct RcfmMatrix RcfmMatrix;

/**
 * Kernel and cokernel dimensions with `index = kernel_dim − coker_dim`.
 */
typedef struct RcfmIndex {
  uint64_t kernel_dim;
  uint64_t coker_dim;
  int64_t index;
  bool certified;
  uint64_t truncation_used;
} RcfmIndex;

/**
 * Triviality verdict for the extension generated by `x ↦ x_image`.
 */
typedef struct RcfmVerdict {
  bool trivial;
  int64_t index;
  /**
   * Whether an exact splitting was constructed.
   */
  bool has_splitting;
} RcfmVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *rcfm_last_error_message(void);

/**
 * Static name of a status code, such as `"not_fredholm"`; `"unknown"` for
 * values outside [`RcfmStatus`].
 */
const char *rcfm_status_name(int32_t status);

/**
 * Parses and evaluates an expression such as `"S(-1)*Dgeo(2) + E(1,3)"`.
 *
 * # Safety
 * `expr` must be a NUL-terminated string; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_parse(const char *expr, struct RcfmMatrix **out);

/**
 * Reads the canonical JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_from_json(const char *json, struct RcfmMatrix **out);

/**
 * Writes the canonical JSON form; free it with [`rcfm_string_free`].
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_to_json(const struct RcfmMatrix *m, char **out);

/**
 * Writes a human-readable rendering; free it with [`rcfm_string_free`].
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_to_string(const struct RcfmMatrix *m, char **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void rcfm_matrix_free(struct RcfmMatrix *m);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void rcfm_string_free(char *s);

/**
 * `out = a + b`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_add(const struct RcfmMatrix *a,
                                const struct RcfmMatrix *b,
                                struct RcfmMatrix **out);

/**
 * `out = a · b`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_mul(const struct RcfmMatrix *a,
                                const struct RcfmMatrix *b,
                                struct RcfmMatrix **out);

/**
 * `out = aᵀ`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_transpose(const struct RcfmMatrix *a, struct RcfmMatrix **out);

/**
 * Exact structural equality.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_equal(const struct RcfmMatrix *a,
                                  const struct RcfmMatrix *b,
                                  bool *out);

/**
 * Entry `(i, j)`, 1-based, as a rational string such as `"-3/2"`.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum RcfmStatus rcfm_matrix_entry(const struct RcfmMatrix *m, uint64_t i, uint64_t j, char **out);

/**
 * Fredholm index. Zero for `max_trunc` or `window` selects the default.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum RcfmStatus rcfm_index(const struct RcfmMatrix *m,
                           uint64_t max_trunc,
                           size_t window,
                           struct RcfmIndex *out);

/**
 * Classifies the extension with generator images `x`, `y` (inverse modulo
 * finite matrices). `depth` bounds the monomial check; zero selects 6.
 *
 * # Safety
 * `x` and `y` must be live handles; `out` must be writable.
 */
enum RcfmStatus rcfm_classify(const struct RcfmMatrix *x,
                              const struct RcfmMatrix *y,
                              uint32_t depth,
                              struct RcfmVerdict *out);

/**
 * Runs one CLI command, e.g. `{"--json", "index", "S(-1)"}`, without the
 * program name. `out` receives standard output, `exit_code` the code the
 * CLI would exit with; standard error goes to the last-error slot.
 *
 * # Safety
 * `argv` must point to `argc` NUL-terminated strings; `exit_code` and `out`
 * must be writable.
 */
enum RcfmStatus rcfm_run(const char *const *argv, size_t argc, int32_t *exit_code, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCFM_H */
