#ifndef MPLAB_H
#define MPLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MplabAxis {
  MPLAB_AXIS_I = 0,
  MPLAB_AXIS_X = 1,
  MPLAB_AXIS_Y = 2,
  MPLAB_AXIS_Z = 3,
} MplabAxis;

typedef enum MplabConvention {
  /**
   * Flip probability `p/2`.
   */
  MPLAB_CONVENTION_HALF = 0,
  /**
   * Flip probability `p`.
   */
  MPLAB_CONVENTION_FULL = 1,
} MplabConvention;

typedef enum MplabStatus {
  MPLAB_STATUS_OK = 0,
  MPLAB_STATUS_INVALID_ARGUMENT = 1,
  MPLAB_STATUS_RESOURCE_LIMIT = 2,
  MPLAB_STATUS_NUMERIC = 3,
  MPLAB_STATUS_INVALID_STATE = 4,
  MPLAB_STATUS_FIT_FAILED = 5,
  MPLAB_STATUS_SCHEMA = 6,
  MPLAB_STATUS_FORMAT = 7,
  MPLAB_STATUS_IO = 8,
  MPLAB_STATUS_NULL_POINTER = 9,
  MPLAB_STATUS_PANIC = 10,
} MplabStatus;

/**
 * Opaque Rényi correlator evaluator for one noisy state.
 */
typedef struct MplabRenyi MplabRenyi;

/**
 * Opaque snapshot dataset.
 */
typedef struct MplabShadows MplabShadows;

/**
 * Opaque pure state.
 */
typedef struct MplabState MplabState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version; static storage.
 */
const char *mplab_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated, always
 * NUL-terminated) and returns the full message length in bytes.
 */
size_t mplab_last_error_message(char *buf, size_t len);

/**
 * Caps dense allocations at `bytes`.
 */
void mplab_set_memory_cap(uint64_t bytes);

/**
 * Ground state of the critical transverse-field Ising chain.
 */
enum MplabStatus mplab_ising_ground_state(size_t l, bool periodic, struct MplabState **out);

size_t mplab_state_n_qubits(const struct MplabState *state);

void mplab_state_free(struct MplabState *state);

/**
 * Rényi-`n` evaluator for the state after dephasing.
 */
enum MplabStatus mplab_renyi_new(const struct MplabState *state,
                                 enum MplabAxis axis,
                                 double p,
                                 enum MplabConvention convention,
                                 uint32_t n,
                                 struct MplabRenyi **out);

/**
 * `tr(ρⁿ O₁[base] O₂[base+l]) / tr(ρⁿ)`.
 */
enum MplabStatus mplab_renyi_correlator(const struct MplabRenyi *ev,
                                        enum MplabAxis o1,
                                        enum MplabAxis o2,
                                        size_t base,
                                        size_t l,
                                        double *value);

void mplab_renyi_free(struct MplabRenyi *ev);

/**
 * Simulates `m` randomized single-qubit Pauli measurements of the dephased state.
 */
enum MplabStatus mplab_shadows_simulate(const struct MplabState *state,
                                        enum MplabAxis axis,
                                        double p,
                                        enum MplabConvention convention,
                                        size_t m,
                                        uint64_t seed,
                                        struct MplabShadows **out);

/**
 * Translation-averaged Rényi-2 correlator estimate and its jackknife error
 * (`stderr` may be null; it receives NaN when unavailable).
 */
enum MplabStatus mplab_shadows_renyi2(const struct MplabShadows *ds,
                                      enum MplabAxis o1,
                                      enum MplabAxis o2,
                                      size_t l,
                                      double *value,
                                      double *stderr);

void mplab_shadows_free(struct MplabShadows *ds);

/**
 * SVD-optimal entanglement fidelity of the two-state Ising code and the
 * channel distance; either output may be null.
 */
enum MplabStatus mplab_decode_svd(size_t l,
                                  enum MplabAxis axis,
                                  double p,
                                  enum MplabConvention convention,
                                  uint64_t seed,
                                  double *fe,
                                  double *d_rho);

/**
 * Randomness-gadget angle and basis-selection probabilities `(p00, p01, p10, p11)`.
 */
enum MplabStatus mplab_gadget(double p, double *theta, double *basis_probs);

/**
 * Reads a NUL-terminated experiment config file and runs it; `success`
 * receives whether every cell ran and every invariant held.
 */
enum MplabStatus mplab_run_config(const char *path, bool *success);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPLAB_H */
