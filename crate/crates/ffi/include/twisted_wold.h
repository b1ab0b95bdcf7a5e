#ifndef TWISTED_WOLD_H
#define TWISTED_WOLD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum TwoldStatus {
  TWOLD_STATUS_OK = 0,
  TWOLD_STATUS_NULL_POINTER = 1,
  TWOLD_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed spec, unknown example, or inconsistent dimensions.
   */
  TWOLD_STATUS_PARSE = 3,
  /**
   * A mathematical precondition failed (e.g. the input is not doubly twisted).
   */
  TWOLD_STATUS_MATH = 4,
  /**
   * The computation ran but at least one check failed; the report is still returned.
   */
  TWOLD_STATUS_CHECK_FAILED = 5,
  TWOLD_STATUS_PANIC = 6,
} TwoldStatus;

/**
 * Opaque tuple handle.
 */
typedef struct TwoldTuple TwoldTuple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a `twisted-tuple/1` JSON document into a new handle.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum TwoldStatus twold_tuple_from_json(const char *json, struct TwoldTuple **out);

/**
 * Build a named fixture (see `twold example list`) with the given seed.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be writable.
 */
enum TwoldStatus twold_tuple_from_example(const char *name, uint64_t seed, struct TwoldTuple **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `t` must come from this library and not be used afterwards.
 */
void twold_tuple_free(struct TwoldTuple *t);

/**
 * Number of coordinates `k`; 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t twold_tuple_rank(const struct TwoldTuple *t);

/**
 * Canonical spec text of the tuple.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum TwoldStatus twold_tuple_to_json(const struct TwoldTuple *t, char **out);

/**
 * Run the relation suite on window `window` and write a JSON array of check
 * reports to `report`. Returns `CHECK_FAILED` when any check fails.
 *
 * # Safety
 * `t` must be a live handle; `report` must be writable.
 */
enum TwoldStatus twold_verify(const struct TwoldTuple *t, size_t window, double tol, char **report);

/**
 * Existence verdict and per-degree summand dimensions as JSON:
 * `{"existence": bool, "witness": …, "summands": {"{0,1}": {"(0,0)": 1, …}, …}}`.
 * Returns `CHECK_FAILED` when no decomposition exists or a check fails.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum TwoldStatus twold_wold_dims_json(const struct TwoldTuple *t, size_t window, char **out);

/**
 * Build the doubly twisted unitary extension and verify it on `window` with
 * levels up to 3. The extended tuple is written to `out` even when a check fails.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum TwoldStatus twold_extend(const struct TwoldTuple *t,
                              size_t window,
                              double tol,
                              struct TwoldTuple **out);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void twold_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. Valid until the next
 * call into the library on the same thread.
 */
const char *twold_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWISTED_WOLD_H */
