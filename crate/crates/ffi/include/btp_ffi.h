#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum BtpStatus {
  BTP_STATUS_OK = 0,
  BTP_STATUS_NULL_POINTER = 1,
  BTP_STATUS_INVALID_UTF8 = 2,
  BTP_STATUS_PARSE = 3,
  BTP_STATUS_SCHEMA = 4,
  BTP_STATUS_NOT_VALIDATED = 5,
  BTP_STATUS_NOT_INTEGRABLE = 6,
  BTP_STATUS_INDETERMINATE = 7,
  BTP_STATUS_PRECONDITION = 8,
  BTP_STATUS_UNKNOWN_NAME = 9,
  BTP_STATUS_INVALID_PARAMETER = 10,
  BTP_STATUS_INTERNAL = 11,
};
typedef int32_t BtpStatus;

/**
 * Classification verdicts and residuals for one structure.
 */
typedef struct BtpReport BtpReport;

/**
 * Validated structure equations of a left-invariant Hermitian structure.
 */
typedef struct BtpStructure BtpStructure;

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *btp_last_error(void);

/**
 * Parses a JSON structure document.
 *
 * # Safety
 * `json` must point to `len` readable bytes and `out` must be writable.
 */
BtpStatus btp_structure_parse(const uint8_t *json, size_t len, struct BtpStructure **out);

/**
 * Builds a catalog entry by family or preset name. `params` is a
 * `key=value` list separated by commas, or null.
 *
 * # Safety
 * `name` and a non-null `params` must be nul-terminated strings; `out` must be writable.
 */
BtpStatus btp_catalog_entry(const char *name, const char *params, struct BtpStructure **out);

/**
 * Complex dimension n, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t btp_structure_dimension(const struct BtpStructure *s);

/**
 * Canonical JSON of the structure; release with [`btp_string_free`]. Null on a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
char *btp_structure_emit(const struct BtpStructure *s);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void btp_structure_free(struct BtpStructure *s);

/**
 * Largest residual of the identities that hold on every Hermitian structure.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
BtpStatus btp_identity_max_residual(const struct BtpStructure *s, double *out);

/**
 * Classifies at tolerance `tol`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
BtpStatus btp_classify(const struct BtpStructure *s, double tol, struct BtpReport **out);

/**
 * Reads a flag such as `"btp_direct"` or `"bkl"`. Flags that are undefined
 * for this structure report `UnknownName`.
 *
 * # Safety
 * `r` must be a live handle, `name` a nul-terminated string and `out` writable.
 */
BtpStatus btp_report_flag(const struct BtpReport *r, const char *name, bool *out);

/**
 * Reads the residual behind a verdict.
 *
 * # Safety
 * `r` must be a live handle, `name` a nul-terminated string and `out` writable.
 */
BtpStatus btp_report_residual(const struct BtpReport *r, const char *name, double *out);

/**
 * The whole report as JSON; release with [`btp_string_free`]. Null on a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
char *btp_report_json(const struct BtpReport *r);

/**
 * # Safety
 * `r` must be null or a handle not yet freed.
 */
void btp_report_free(struct BtpReport *r);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void btp_string_free(char *s);
