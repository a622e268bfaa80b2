#ifndef CAREALLOC_H
#define CAREALLOC_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Policy selector for `ca_compare`.
 */
typedef enum CaPolicy {
  CA_POLICY_NONE = 0,
  CA_POLICY_MYOPIC = 1,
  CA_POLICY_ADP = 2,
} CaPolicy;

/**
 * Status codes returned by every fallible call.
 */
typedef enum CaStatus {
  CA_STATUS_OK = 0,
  /**
   * Null pointer, bad enum value, or argument out of range.
   */
  CA_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Input could not be read or parsed as a model spec.
   */
  CA_STATUS_PARSE_ERROR = 2,
  /**
   * Solver failure (no convergence, unbounded, or infeasible).
   */
  CA_STATUS_SOLVE_ERROR = 3,
  /**
   * Simulation failure.
   */
  CA_STATUS_SIM_ERROR = 4,
} CaStatus;

/**
 * Opaque model-spec handle.
 */
typedef struct CaSpec CaSpec;

/**
 * Opaque bias-weights handle.
 */
typedef struct CaWeights CaWeights;

/**
 * Paired-comparison summary (means are home days per patient per period).
 */
typedef struct CaComparison {
  double mean_a;
  double mean_b;
  double mean_diff;
  double t_statistic;
  double p_value;
  double annual_gain_per_1000;
} CaComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread, or null if none.
 * The pointer is valid until the next failing call on the same thread.
 */
const char *ca_last_error_message(void);

/**
 * Library version as a static C string.
 */
const char *ca_version(void);

/**
 * Loads and validates a spec file (JSON). On success writes a handle to
 * `out`; the caller owns it and must call `ca_spec_free`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be non-null.
 */
enum CaStatus ca_spec_load(const char *path, struct CaSpec **out);

/**
 * Parses a spec from a JSON string.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be non-null.
 */
enum CaStatus ca_spec_from_json(const char *json, struct CaSpec **out);

/**
 * Generates a deterministic synthetic spec (same arguments, same spec).
 *
 * # Safety
 * `out` must be non-null.
 */
enum CaStatus ca_spec_generate(uint64_t seed,
                               uintptr_t p,
                               uintptr_t num_bases,
                               struct CaSpec **out);

/**
 * Covariate dimension of the spec.
 *
 * # Safety
 * `spec` must be a live handle from this library.
 */
uintptr_t ca_spec_dim(const struct CaSpec *spec);

/**
 * # Safety
 * `spec` must be null or a handle owned by the caller; it is consumed.
 */
void ca_spec_free(struct CaSpec *spec);

/**
 * Solves for bias weights: mortality threshold first, then row generation
 * at the given capacity ratio and tolerance.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be non-null.
 */
enum CaStatus ca_solve(const struct CaSpec *spec,
                       double capacity_ratio,
                       double tol,
                       struct CaWeights **out);

/**
 * Number of basis weights.
 *
 * # Safety
 * `weights` must be a live handle.
 */
uintptr_t ca_weights_len(const struct CaWeights *weights);

/**
 * Reads basis weight `index` into `out`.
 *
 * # Safety
 * `weights` must be a live handle; `out` must be non-null.
 */
enum CaStatus ca_weights_get(const struct CaWeights *weights, uintptr_t index, double *out);

/**
 * # Safety
 * `weights` must be a live handle.
 */
double ca_weights_lambda(const struct CaWeights *weights);

/**
 * # Safety
 * `weights` must be a live handle.
 */
double ca_weights_objective(const struct CaWeights *weights);

/**
 * # Safety
 * `weights` must be a live handle.
 */
double ca_weights_delta_star(const struct CaWeights *weights);

/**
 * Equilibrium value rate of the untreated arm.
 *
 * # Safety
 * `weights` must be a live handle.
 */
double ca_weights_zeta0(const struct CaWeights *weights);

/**
 * Equilibrium value rate of the treated arm.
 *
 * # Safety
 * `weights` must be a live handle.
 */
double ca_weights_zeta1(const struct CaWeights *weights);

/**
 * # Safety
 * `weights` must be null or a handle owned by the caller; it is consumed.
 */
void ca_weights_free(struct CaWeights *weights);

/**
 * Runs a paired comparison of two policies on identical noise streams and
 * writes the summary to `out`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be non-null.
 */
enum CaStatus ca_compare(const struct CaSpec *spec,
                         uintptr_t n,
                         uintptr_t m,
                         uintptr_t horizon,
                         uintptr_t replications,
                         uint64_t seed,
                         enum CaPolicy policy_a,
                         enum CaPolicy policy_b,
                         struct CaComparison *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAREALLOC_H */
