#ifndef HARRIS_KINETICS_H
#define HARRIS_KINETICS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum HkStatus {
  HK_STATUS_OK = 0,
  HK_STATUS_NULL_POINTER = 1,
  HK_STATUS_INVALID_INPUT = 2,
  HK_STATUS_INVALID_UTF8 = 3,
  HK_STATUS_JSON = 4,
  HK_STATUS_NOT_CONVERGED = 5,
  /**
   * The operation does not apply to this object.
   */
  HK_STATUS_UNSUPPORTED = 6,
  HK_STATUS_RUNTIME = 7,
  HK_STATUS_PANIC = 8,
} HkStatus;

/**
 * Moment profiles available from [`hk_steady_profile`].
 */
typedef enum HkMoment {
  HK_MOMENT_DENSITY = 0,
  HK_MOMENT_VELOCITY = 1,
  HK_MOMENT_PRESSURE = 2,
  HK_MOMENT_TEMPERATURE = 3,
  HK_MOMENT_POSITION = 4,
} HkMoment;

/**
 * Opaque model handle.
 */
typedef struct HkModel HkModel;

/**
 * Opaque convergence-bound handle.
 */
typedef struct HkRateBound HkRateBound;

/**
 * Opaque stationary-solution handle.
 */
typedef struct HkSteadyState HkSteadyState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next library call on the same thread.
 */
const char *hk_last_error(void);

/**
 * Library version, a static string.
 */
const char *hk_version(void);

/**
 * Frees a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void hk_string_free(char *s);

/**
 * Looks up a named model preset.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum HkStatus hk_model_preset(const char *name, struct HkModel **out);

/**
 * Parses a model from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HkStatus hk_model_from_json(const char *json, struct HkModel **out);

/**
 * Phase-space dimension `d` of the model (positions and velocities in `R^d`).
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HkStatus hk_model_dim(const struct HkModel *model, size_t *out);

/**
 * JSON description of the model; free with [`hk_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HkStatus hk_model_to_json(const struct HkModel *model, char **out);

/**
 * # Safety
 * `model` must come from this library and not be freed twice.
 */
void hk_model_free(struct HkModel *model);

/**
 * Geometric bound from a minorisation constant `alpha` at time `tau`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HkStatus hk_doeblin_rate(double alpha, double tau, struct HkRateBound **out);

/**
 * Geometric bound for degenerate scattering.
 *
 * # Safety
 * `out` must be writable.
 */
enum HkStatus hk_degenerate_boltzmann_rate(double beta,
                                           double kappa,
                                           double tau,
                                           double sigma_inf,
                                           struct HkRateBound **out);

/**
 * Subgeometric envelope with rate function `V(s) = 1 + s^xi`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HkStatus hk_subgeometric_power(double xi, double c, double mu_phi, struct HkRateBound **out);

/**
 * Envelope value at time `t >= 0`.
 *
 * # Safety
 * `bound` must be a live handle; `out` must be writable.
 */
enum HkStatus hk_rate_bound_eval(const struct HkRateBound *bound, double t, double *out);

/**
 * Prefactor `C`.
 *
 * # Safety
 * `bound` must be a live handle; `out` must be writable.
 */
enum HkStatus hk_rate_bound_c(const struct HkRateBound *bound, double *out);

/**
 * Exponential rate `lambda`; `Unsupported` for subgeometric bounds.
 *
 * # Safety
 * `bound` must be a live handle; `out` must be writable.
 */
enum HkStatus hk_rate_bound_lambda(const struct HkRateBound *bound, double *out);

/**
 * # Safety
 * `bound` must come from this library and not be freed twice.
 */
void hk_rate_bound_free(struct HkRateBound *bound);

/**
 * Stationary nonlinear BGK solution on `[0, 1]` with wall temperatures
 * `t0`, `t1` and Knudsen number `kappa`, first-order upwind transport.
 * Returns `NotConverged` (and no handle) if `max_iter` sweeps do not reach `tol`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HkStatus hk_steady_solve(double t0,
                              double t1,
                              double kappa,
                              size_t nx,
                              size_t nv,
                              double tol,
                              size_t max_iter,
                              struct HkSteadyState **out);

/**
 * Number of spatial cells.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum HkStatus hk_steady_len(const struct HkSteadyState *state, size_t *out);

/**
 * Copies one moment profile into `buf`, which must hold `len` values with
 * `len` equal to [`hk_steady_len`].
 *
 * # Safety
 * `state` must be a live handle and `buf` valid for `len` writes.
 */
enum HkStatus hk_steady_profile(const struct HkSteadyState *state,
                                enum HkMoment which,
                                double *buf,
                                size_t len);

/**
 * # Safety
 * `state` must come from this library and not be freed twice.
 */
void hk_steady_free(struct HkSteadyState *state);

/**
 * Runs one command-line subcommand (`rates`, `verify-drift`, `tv-decay`, …)
 * on a JSON run configuration without touching the file system. On success
 * `out_json` receives `{"status", "summary", "config"}`; free it with
 * [`hk_string_free`]. A certified failure or inconclusive result still
 * returns `Ok`; inspect `status`.
 *
 * # Safety
 * `subcommand` and `config_json` must be NUL-terminated strings; `out_json`
 * must be writable.
 */
enum HkStatus hk_run_json(const char *subcommand, const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARRIS_KINETICS_H */
