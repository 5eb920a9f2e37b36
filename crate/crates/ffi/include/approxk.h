#ifndef APPROXK_H
#define APPROXK_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of a call. Numerical failures have one code per error kind.
typedef enum ApproxkStatus {
  APPROXK_STATUS_OK = 0,
  // The scenario ran but at least one check failed.
  APPROXK_STATUS_CHECKS_FAILED = 1,
  // Malformed scenario, bad options or invalid arguments.
  APPROXK_STATUS_INVALID_INPUT = 2,
  APPROXK_STATUS_NULL_POINTER = 3,
  APPROXK_STATUS_INVALID_UTF8 = 4,
  APPROXK_STATUS_PANIC = 5,
  APPROXK_STATUS_NOT_INVERTIBLE = 10,
  APPROXK_STATUS_DEFECTIVE_MATRIX = 11,
  APPROXK_STATUS_CLOSURE_FAILURE = 12,
  APPROXK_STATUS_AMBIGUOUS_INTERSECTION = 13,
  APPROXK_STATUS_DECOMPOSITION_FAILURE = 14,
  APPROXK_STATUS_NOT_A_CLASS = 15,
  APPROXK_STATUS_NOT_EQUIVALENT = 16,
  APPROXK_STATUS_PATH_TOO_COARSE = 17,
  APPROXK_STATUS_GRID_TOO_COARSE = 18,
  APPROXK_STATUS_NOT_QUANTIZED = 19,
  APPROXK_STATUS_DEFECT_TOO_LARGE = 20,
  APPROXK_STATUS_SPECTRAL_AMBIGUITY = 21,
  APPROXK_STATUS_NOT_CLOSE_ENOUGH = 22,
  APPROXK_STATUS_ROUNDING_UNSTABLE = 23,
  APPROXK_STATUS_NOT_A_CONTRACTION = 24,
  APPROXK_STATUS_NEEDS_HOMOTOPY_NORMALIZATION = 25,
  APPROXK_STATUS_EXACTNESS_VIOLATION = 26,
  APPROXK_STATUS_IOTA_NOT_ZERO = 27,
  APPROXK_STATUS_NO_WITNESS = 28,
  APPROXK_STATUS_RECONSTRUCTION_FAILED = 29,
  APPROXK_STATUS_PAIR_NOT_UNIFORM = 30,
} ApproxkStatus;

// Result of a scenario run.
typedef struct ApproxkReport ApproxkReport;

// Run settings. Start from [`approxk_options_default`].
typedef struct ApproxkOptions {
  // Membership tolerance; non-positive keeps the default or `APPROXK_TOL`.
  double membership_tol;
  // Replaces the scenario's seed when `has_seed` is set.
  uint64_t seed;
  bool has_seed;
  // Loop sample count; 0 keeps the scenario's.
  size_t grid;
  // Worker threads; 0 is treated as 1.
  size_t jobs;
} ApproxkOptions;

// Measurements of one idempotent rounding.
typedef struct ApproxkRieszCert {
  // `||e^2 - e||`.
  double defect;
  // `||e||`.
  double norm;
  // Distance from the input to the rounded idempotent.
  double distance;
  double bound;
  bool passed;
} ApproxkRieszCert;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string.
const char *approxk_version(void);

// Stable name of a status code as a static string; `"Unknown"` for other values.
const char *approxk_status_name(int32_t code);

// Message of the last failure on this thread; valid until the next failing call.
const char *approxk_last_error(void);

struct ApproxkOptions approxk_options_default(void);

// Runs a scenario given as NUL-terminated JSON text.
//
// On `Ok` and `ChecksFailed` a report is stored in `*out`; otherwise `*out` is null.
// `options` may be null for defaults.
//
// # Safety
// `scenario_json` must be a valid NUL-terminated string, `options` null or valid,
// and `out` a valid pointer to writable storage.
enum ApproxkStatus approxk_run_scenario(const char *scenario_json,
                                        const struct ApproxkOptions *options,
                                        struct ApproxkReport **out);

// Whether every check passed; false for a null handle.
//
// # Safety
// `report` must be null or a live handle from [`approxk_run_scenario`].
bool approxk_report_passed(const struct ApproxkReport *report);

// Number of checks run; 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle from [`approxk_run_scenario`].
size_t approxk_report_check_count(const struct ApproxkReport *report);

// Number of failed checks; 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle from [`approxk_run_scenario`].
size_t approxk_report_failed_count(const struct ApproxkReport *report);

// Pretty-printed JSON report, owned by the handle; null for a null handle.
//
// # Safety
// `report` must be null or a live handle from [`approxk_run_scenario`].
const char *approxk_report_json(const struct ApproxkReport *report);

// CSV summary `name,kind,passed,error`, owned by the handle; null for a null handle.
//
// # Safety
// `report` must be null or a live handle from [`approxk_run_scenario`].
const char *approxk_report_csv(const struct ApproxkReport *report);

// Releases a report; null is ignored.
//
// # Safety
// `report` must be null or a handle from [`approxk_run_scenario`] not yet freed.
void approxk_report_free(struct ApproxkReport *report);

// Rounds an almost-idempotent `n x n` matrix to an idempotent.
//
// Matrices are row-major with separate real and imaginary parts. `out_re`,
// `out_im` and `cert` may be null when not wanted.
//
// # Safety
// `re` and `im` must point to `n * n` readable doubles; non-null outputs to
// `n * n` writable doubles and one writable certificate.
enum ApproxkStatus approxk_riesz_round(const double *re,
                                       const double *im,
                                       size_t n,
                                       double *out_re,
                                       double *out_im,
                                       struct ApproxkRieszCert *cert);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APPROXK_H */
