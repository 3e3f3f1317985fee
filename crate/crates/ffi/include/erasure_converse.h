#ifndef ERASURE_CONVERSE_H
#define ERASURE_CONVERSE_H

/* Generated by cbindgen from erasure-converse-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
enum EcvStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  ECV_STATUS_OK = 0,
  ECV_STATUS_NULL_POINTER = 1,
  ECV_STATUS_INVALID_ARGUMENT = 2,
  ECV_STATUS_GUARD_EXCEEDED = 3,
  ECV_STATUS_NUMERIC_FAILURE = 4,
  ECV_STATUS_IO_ERROR = 5,
  ECV_STATUS_INVALID_UTF8 = 6,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum EcvStatus EcvStatus;
#else
typedef int32_t EcvStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque handle to a pure code state.
 */
typedef struct EcvState EcvState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the underlying crate; static storage, do not free.
 */
const char *ecv_version(void);

/**
 * Copy the last error message on this thread into `buf` (truncated to
 * `cap - 1` bytes, always NUL-terminated when `cap > 0`). Returns the full
 * message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes (or be NULL to query
 * the length only).
 */
uintptr_t ecv_last_error_message(char *buf, uintptr_t cap);

/**
 * Sample a Haar-random pure state on the given subsystem dimensions.
 *
 * # Safety
 * `dims` must point to `ndims` readable u32 values; `out` must be a valid
 * location for a handle pointer. The handle must be released with
 * [`ecv_state_free`].
 */
EcvStatus ecv_state_haar(const uint32_t *dims,
                         uintptr_t ndims,
                         uint64_t seed,
                         struct EcvState **out);

/**
 * Parse a state from the JSON state-file format
 * `{"dims": [...], "re": [...], "im": [...]}` given as a NUL-terminated
 * string.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` as in
 * [`ecv_state_haar`].
 */
EcvStatus ecv_state_parse_json(const char *text, struct EcvState **out);

/**
 * Load a state from a JSON state file on disk.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` as in
 * [`ecv_state_haar`].
 */
EcvStatus ecv_state_load_json(const char *path, struct EcvState **out);

/**
 * Release a state handle. Passing NULL is a no-op.
 *
 * # Safety
 * `state` must be a handle produced by this library, released once.
 */
void ecv_state_free(struct EcvState *state);

/**
 * Total Hilbert-space dimension of the state.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
EcvStatus ecv_state_total_dim(const struct EcvState *state, uintptr_t *out);

/**
 * Per-code fidelity bound for a code state [M, d, ..., d] at erasure
 * probability `p` and Rényi order `alpha`; writes the clamped bound and the
 * signed rate-difference exponent.
 *
 * # Safety
 * `state` must be a live handle; output pointers must be writable.
 */
EcvStatus ecv_fidelity_bound(const struct EcvState *state,
                             double p,
                             double alpha,
                             double *value,
                             double *exponent);

/**
 * Exact optimal decoder fidelity of the code state via the per-branch SDP
 * (guards: n <= 3, d = 2, M <= 8).
 *
 * # Safety
 * As in [`ecv_fidelity_bound`].
 */
EcvStatus ecv_oracle_fidelity(const struct EcvState *state, double p, double tol, double *out);

/**
 * Haar-ensemble expected-fidelity bound at the given parameters.
 *
 * # Safety
 * Output pointers must be writable.
 */
EcvStatus ecv_expected_fidelity_bound(uint32_t n,
                                      uint32_t d,
                                      double p,
                                      double rate,
                                      double alpha,
                                      double opnorm_c,
                                      double *value,
                                      double *exponent);

/**
 * Optimize the strong-converse exponent over the alpha grid.
 *
 * # Safety
 * Output pointers must be writable.
 */
EcvStatus ecv_optimize_exponent(uint32_t n,
                                uint32_t d,
                                double p,
                                double rate,
                                double opnorm_c,
                                uint32_t grid_size,
                                double *best_alpha,
                                double *best_exponent);

/**
 * Classical success-probability bound.
 *
 * # Safety
 * `out` must be writable.
 */
EcvStatus ecv_classical_success_bound(uint32_t n,
                                      uint32_t d,
                                      double p,
                                      double rate,
                                      double alpha,
                                      double *out);

/**
 * Quantum capacity max(0, (1-2p) log2 d) in bits per use.
 *
 * # Safety
 * `out` must be writable.
 */
EcvStatus ecv_quantum_capacity(double p, uint32_t d, double *out);

/**
 * Classical capacity (1-p) log2 d in bits per use.
 *
 * # Safety
 * `out` must be writable.
 */
EcvStatus ecv_classical_capacity(double p, uint32_t d, double *out);

/**
 * Levy tail bound at deviation `delta` (must be in [0, 2]).
 *
 * # Safety
 * `out` must be writable.
 */
EcvStatus ecv_levy_tail(uint32_t n,
                        uint32_t d,
                        double rate,
                        double delta,
                        double levy_c,
                        double *out);

/**
 * Empirical operator-norm constant: d_R times the mean largest marginal
 * eigenvalue over `trials` Haar states on d_R (x) d_S.
 *
 * # Safety
 * `out` must be writable.
 */
EcvStatus ecv_estimate_opnorm_constant(uint32_t d_r,
                                       uint32_t d_s,
                                       uint64_t trials,
                                       uint64_t seed,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERASURE_CONVERSE_H */
