#ifndef PACDYN_H
#define PACDYN_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PacdynStatus {
  PACDYN_STATUS_OK = 0,
  PACDYN_STATUS_NULL_POINTER = 1,
  PACDYN_STATUS_INVALID_UTF8 = 2,
  PACDYN_STATUS_CONFIG = 3,
  PACDYN_STATUS_SOLVER = 4,
  PACDYN_STATUS_DIMENSION = 5,
  PACDYN_STATUS_IO = 6,
  PACDYN_STATUS_PANIC = 7,
} PacdynStatus;

/**
 * Opaque simulation handle.
 */
typedef struct PacdynSim PacdynSim;

/**
 * Diagnostics of the current state.
 */
typedef struct PacdynDiagnostics {
  uint64_t step;
  double time;
  double mass_bulk;
  double mass_surf;
  double energy_bulk;
  double energy_surf;
  double energy_total;
  double steady_residual;
  /**
   * CG iterations of the last step, 0 before the first.
   */
  uint64_t solver_iterations;
} PacdynDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pacdyn_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *pacdyn_last_error_message(void);

/**
 * Creates a simulation from a JSON run config and builds its initial
 * field. On success `*out` owns a handle to release with `pacdyn_sim_free`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PacdynStatus pacdyn_sim_new(const char *config_json, struct PacdynSim **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from `pacdyn_sim_new` and not be used afterwards.
 */
void pacdyn_sim_free(struct PacdynSim *sim);

/**
 * Takes `n` steps. `steps_taken` may be null; otherwise it receives the
 * number of completed steps, also on failure.
 *
 * # Safety
 * `sim` must be a live handle; `steps_taken` null or valid.
 */
enum PacdynStatus pacdyn_sim_step(struct PacdynSim *sim, uint64_t n, uint64_t *steps_taken);

/**
 * Steps until the steady residual reaches the configured tolerance or
 * the config's `max_steps` total is reached. `steady` may be null.
 *
 * # Safety
 * `sim` must be a live handle; `steady` null or valid.
 */
enum PacdynStatus pacdyn_sim_run(struct PacdynSim *sim, bool *steady);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum PacdynStatus pacdyn_sim_diagnostics(const struct PacdynSim *sim,
                                         struct PacdynDiagnostics *out);

/**
 * Grid resolution `N` and node count `(N+1)^2`. Either pointer may be null.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PacdynStatus pacdyn_sim_grid(const struct PacdynSim *sim, size_t *n, size_t *node_count);

/**
 * Copies the field, row-major with `y = 0` first, into `buf`, which must
 * hold exactly the node count.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum PacdynStatus pacdyn_sim_copy_field(const struct PacdynSim *sim, double *buf, size_t len);

/**
 * Replaces the field, keeping the step counter and time. Diagnostics are
 * recomputed for the new field.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` reads.
 */
enum PacdynStatus pacdyn_sim_set_field(struct PacdynSim *sim, const double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACDYN_H */
