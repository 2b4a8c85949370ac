#ifndef LCPOW_H
#define LCPOW_H

/* Generated by cbindgen from the lcpow-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of an interface call. Zero is success; everything else is
// a failure whose message `lcpow_last_error_message` returns.
typedef enum LcpowStatus {
  LCPOW_STATUS_OK = 0,
  // A required pointer argument was null.
  LCPOW_STATUS_NULL_ARG = 1,
  // An argument was out of range or otherwise unusable.
  LCPOW_STATUS_INVALID_ARG = 2,
  // Text input (series id, file content) failed to parse.
  LCPOW_STATUS_PARSE = 3,
  // The requested computation exceeds the memory budget.
  LCPOW_STATUS_RESOURCE = 4,
  // The truncation order is too small for the requested certified
  // computation.
  LCPOW_STATUS_PRECISION = 5,
  // File input/output or serialization failed.
  LCPOW_STATUS_IO = 6,
  // An internal invariant failed; the handle contents are suspect.
  LCPOW_STATUS_INTERNAL = 7,
} LcpowStatus;

// Nekrasov-Okounkov polynomials Q_0 .. Q_n with exact rational
// coefficients.
typedef struct LcpowQTable LcpowQTable;

// A rational power series truncated at a fixed order, the base object
// tables are built from.
typedef struct LcpowSeries LcpowSeries;

// Exact coefficient table of f^1 .. f^K up to a truncation order.
typedef struct LcpowTable LcpowTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Toolkit version as a static NUL-terminated string. Never null; do not
// free.
const char *lcpow_version(void);

// Message of the most recent failing call on this thread, as a fresh
// string the caller frees with `lcpow_string_free`. Null when no call
// has failed yet.
char *lcpow_last_error_message(void);

// Releases a string returned through an out pointer. Null is a no-op.
//
// # Safety
// `s` must be a pointer previously returned by this library and not
// freed since.
void lcpow_string_free(char *s);

// Builds the series named by `series_id` ("geometric", "geometric:p/q",
// "constant:p/q", "sigma-shifted", "sigma", "custom:<path>") truncated at
// order `n`, writing the new handle to `out`.
//
// # Safety
// `series_id` must be a NUL-terminated string and `out` a valid pointer.
enum LcpowStatus lcpow_series_new(const char *series_id, size_t n, struct LcpowSeries **out);

// Truncation order of the series; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle from `lcpow_series_new`.
size_t lcpow_series_truncation(const struct LcpowSeries *series);

// Writes coefficient a_n as a canonical "p/q" string to `out`.
//
// # Safety
// `series` must be a live handle and `out` a valid pointer.
enum LcpowStatus lcpow_series_coeff_str(const struct LcpowSeries *series, size_t n, char **out);

// Releases a series handle. Null is a no-op.
//
// # Safety
// `series` must be null or a live handle, and is dead afterwards.
void lcpow_series_free(struct LcpowSeries *series);

// Builds the exact table of f^1 .. f^k_max truncated at order `n`
// (at most the series truncation), writing the handle to `out`.
//
// # Safety
// `series` must be a live handle and `out` a valid pointer.
enum LcpowStatus lcpow_table_build(const struct LcpowSeries *series,
                                   uint32_t k_max,
                                   size_t n,
                                   struct LcpowTable **out);

// Largest power K held by the table; 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle.
uint32_t lcpow_table_k_max(const struct LcpowTable *table);

// Truncation order of the table; 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle.
size_t lcpow_table_n(const struct LcpowTable *table);

// Writes coefficient [q^n] f^k as a canonical "p/q" string to `out`.
//
// # Safety
// `table` must be a live handle and `out` a valid pointer.
enum LcpowStatus lcpow_table_coeff_str(const struct LcpowTable *table,
                                       uint32_t k,
                                       size_t n,
                                       char **out);

// Scans row k for log-concavity: writes the number of interior indices
// passing c_{n-1} c_{n+1} <= c_n^2 before the first failure to
// `out_prefix_len`, and the first failing index to `out_first_violation`
// (-1 when the whole row passes).
//
// # Safety
// `table` must be a live handle; both out pointers must be valid.
enum LcpowStatus lcpow_table_logconcave_prefix(const struct LcpowTable *table,
                                               uint32_t k,
                                               size_t *out_prefix_len,
                                               int64_t *out_first_violation);

// Saves the table as JSON at `path`.
//
// # Safety
// `table` must be a live handle and `path` a NUL-terminated string.
enum LcpowStatus lcpow_table_save(const struct LcpowTable *table, const char *path);

// Loads a table previously written by `lcpow_table_save`, validating the
// file before accepting it.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum LcpowStatus lcpow_table_load(const char *path, struct LcpowTable **out);

// Releases a table handle. Null is a no-op.
//
// # Safety
// `table` must be null or a live handle, and is dead afterwards.
void lcpow_table_free(struct LcpowTable *table);

// Builds Q_0 .. Q_n_max by the divisor-sum recurrence. `budget_mib`
// caps estimated memory; 0 selects the default budget.
//
// # Safety
// `out` must be a valid pointer.
enum LcpowStatus lcpow_qtable_build(size_t n_max, uint64_t budget_mib, struct LcpowQTable **out);

// Largest n held by the Q-table; 0 for a null handle.
//
// # Safety
// `qtable` must be null or a live handle.
size_t lcpow_qtable_n_max(const struct LcpowQTable *qtable);

// Writes the coefficient of z^j in Q_n as a canonical "p/q" string to
// `out`. Q_n has degree n, so j ranges over 0..=n.
//
// # Safety
// `qtable` must be a live handle and `out` a valid pointer.
enum LcpowStatus lcpow_qtable_coeff_str(const struct LcpowQTable *qtable,
                                        size_t n,
                                        size_t j,
                                        char **out);

// Releases a Q-table handle. Null is a no-op.
//
// # Safety
// `qtable` must be null or a live handle, and is dead afterwards.
void lcpow_qtable_free(struct LcpowQTable *qtable);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCPOW_H */
