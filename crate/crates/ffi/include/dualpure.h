#ifndef DUALPURE_H
#define DUALPURE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome. The numeric values match the command-line exit codes.
typedef enum DpStatus {
  DP_STATUS_OK = 0,
  // Malformed text, bad rates or mismatched sizes.
  DP_STATUS_INVALID_INPUT = 2,
  // Post-selection starved, denominator collapse and similar.
  DP_STATUS_NUMERIC = 3,
  DP_STATUS_NULL_POINTER = 4,
  // A Rust panic was caught at the boundary.
  DP_STATUS_PANIC = 5,
} DpStatus;

typedef enum DpTopology {
  DP_TOPOLOGY_ALL_TO_ALL = 0,
  DP_TOPOLOGY_LINEAR = 1,
} DpTopology;

typedef enum DpMethod {
  DP_METHOD_EF = 0,
  DP_METHOD_RAW = 1,
  DP_METHOD_DSP_PROJECTIVE = 2,
  DP_METHOD_DSP = 3,
  DP_METHOD_TP = 4,
  DP_METHOD_ANALYTIC = 5,
} DpMethod;

typedef struct DpCircuit DpCircuit;

typedef struct DpNoiseModel DpNoiseModel;

typedef struct DpEstimateOptions {
  enum DpTopology topology;
  // 0 selects exact expectations.
  uint64_t shots;
  uint64_t seed;
  bool noisy_intermediate;
} DpEstimateOptions;

// Estimate and diagnostics; diagnostics a method does not produce are NaN.
typedef struct DpEstimate {
  double value;
  double p_tilde;
  double denominator;
  double cond_y_abs;
  double purity;
} DpEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *dp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *dp_version(void);

// Parses circuit-file text into `*out`.
//
// # Safety
// `text` is a NUL-terminated string; `out` is writable.
enum DpStatus dp_circuit_parse(const char *text, struct DpCircuit **out);

// Register size, 0 for NULL.
//
// # Safety
// `c` is NULL or a live handle.
size_t dp_circuit_num_qubits(const struct DpCircuit *c);

// # Safety
// `c` is NULL or a handle from `dp_circuit_parse` not yet freed.
void dp_circuit_free(struct DpCircuit *c);

// Parses and validates a noise-model JSON document.
//
// # Safety
// `json` is a NUL-terminated string; `out` is writable.
enum DpStatus dp_noise_from_json(const char *json, struct DpNoiseModel **out);

// Pauli-channel model on `n` qubits with total rate `eps_t` over `n_gates`.
//
// # Safety
// `out` is writable.
enum DpStatus dp_noise_sample_appc(size_t n,
                                   size_t n_gates,
                                   double eps_t,
                                   uint64_t seed,
                                   struct DpNoiseModel **out);

// Depolarizing, dephasing and damping model on `n` qubits, scale `eps`.
//
// # Safety
// `out` is writable.
enum DpStatus dp_noise_sample_appe(size_t n, double eps, uint64_t seed, struct DpNoiseModel **out);

// Serializes a model; free the result with `dp_string_free`.
//
// # Safety
// `nm` is a live handle; `out` is writable.
enum DpStatus dp_noise_to_json(const struct DpNoiseModel *nm, char **out);

// # Safety
// `nm` is NULL or a handle not yet freed.
void dp_noise_free(struct DpNoiseModel *nm);

// # Safety
// `s` is NULL or a string returned by this library not yet freed.
void dp_string_free(char *s);

// Default options: all-to-all basis, exact mode, seed 0, noisy intermediate.
struct DpEstimateOptions dp_estimate_options_default(void);

// `<observable>` after `circuit` under `nm` by `method`. A NULL `nm` is
// noiseless; NULL `opts` uses the defaults.
//
// # Safety
// Handles are live, `observable` is NUL-terminated, `out` is writable.
enum DpStatus dp_estimate(const struct DpCircuit *circuit,
                          const char *observable,
                          const struct DpNoiseModel *nm,
                          enum DpMethod method,
                          const struct DpEstimateOptions *opts,
                          struct DpEstimate *out);

// Measurement-basis circuit for `pauli` as circuit-file text in
// `*out_text` (free with `dp_string_free`) and its pivot qubit.
//
// # Safety
// `pauli` is NUL-terminated; the out pointers are writable.
enum DpStatus dp_compile_basis(const char *pauli,
                               enum DpTopology topology,
                               char **out_text,
                               size_t *out_pivot);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUALPURE_H */
