/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef QPDM_H
#define QPDM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QpdmStatus {
  QPDM_STATUS_OK = 0,
  QPDM_STATUS_NULL_POINTER = 1,
  QPDM_STATUS_INVALID_UTF8 = 2,
  QPDM_STATUS_PARSE = 3,
  QPDM_STATUS_CONTRACT = 4,
  QPDM_STATUS_INTERNAL = 5,
  QPDM_STATUS_ACCOUNTING = 6,
  QPDM_STATUS_ANTECEDENT_TOO_RARE = 7,
  QPDM_STATUS_NOT_ACCEPTED = 8,
  QPDM_STATUS_NO_CANDIDATE = 9,
  QPDM_STATUS_BUFFER_TOO_SMALL = 10,
  QPDM_STATUS_PANIC = 11,
} QpdmStatus;

/**
 * Opaque transaction database.
 */
typedef struct QpdmDatabase QpdmDatabase;

typedef struct QpdmSupportEstimate {
  double value;
  double error_bound;
  double s1;
  double s2;
  size_t rounds_used;
  size_t qubits_sent;
  bool accepted;
} QpdmSupportEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from this thread.
 */
const char *qpdm_last_error(void);

/**
 * Parses database text (CSV with header or one 0/1 string per line).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum QpdmStatus qpdm_database_parse(const char *text, struct QpdmDatabase **out);

/**
 * # Safety
 * `db` must come from [`qpdm_database_parse`] and not be freed twice.
 */
void qpdm_database_free(struct QpdmDatabase *db);

/**
 * Number of items, or 0 for a null handle.
 *
 * # Safety
 * `db` must be null or a live handle.
 */
size_t qpdm_database_n_items(const struct QpdmDatabase *db);

/**
 * Number of transactions before padding, or 0 for a null handle.
 *
 * # Safety
 * `db` must be null or a live handle.
 */
size_t qpdm_database_n_transactions(const struct QpdmDatabase *db);

/**
 * Exact support of the 1-based `items`.
 *
 * # Safety
 * `items` must point to `len` values; `out` must be writable.
 */
enum QpdmStatus qpdm_exact_support(const struct QpdmDatabase *db,
                                   const size_t *items,
                                   size_t len,
                                   double *out);

/**
 * Two-party quantum support estimate with bit-flip keys, agreement band
 * 0.01 and at most 16 rounds. Alice holds items `1..=split`.
 *
 * # Safety
 * `items` must point to `len` values; `out` must be writable.
 */
enum QpdmStatus qpdm_estimate_support(const struct QpdmDatabase *db,
                                      size_t split,
                                      const size_t *items,
                                      size_t len,
                                      size_t p,
                                      double s,
                                      uint64_t seed,
                                      struct QpdmSupportEstimate *out);

/**
 * Full mining run; writes a JSON report that must be released with
 * [`qpdm_string_free`].
 *
 * # Safety
 * `out` must be writable.
 */
enum QpdmStatus qpdm_mine_json(const struct QpdmDatabase *db,
                               size_t split,
                               double s,
                               double c,
                               size_t p,
                               uint64_t seed,
                               char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void qpdm_string_free(char *s);

/**
 * `x^e mod p` under a validated commutative key.
 *
 * # Safety
 * `out` must be writable.
 */
enum QpdmStatus qpdm_classical_pow(uint64_t x, uint64_t p, uint64_t e, uint64_t *out);

/**
 * Exhaustive exponent search. Writes up to `capacity` candidates and the
 * full count to `count`; returns `BufferTooSmall` when they do not fit.
 *
 * # Safety
 * `singly`/`doubly` must point to their lengths in values, `candidates` to
 * `capacity` writable values, and `count` must be writable.
 */
enum QpdmStatus qpdm_key_attack(uint64_t p,
                                const uint64_t *singly,
                                size_t singly_len,
                                const uint64_t *doubly,
                                size_t doubly_len,
                                uint64_t *candidates,
                                size_t capacity,
                                size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPDM_H */
