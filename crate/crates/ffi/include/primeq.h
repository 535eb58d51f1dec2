#ifndef PRIMEQ_H
#define PRIMEQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define PEQ_OK 0

/**
 * Any failure without a more specific code.
 */
#define PEQ_ERR_OTHER 1

/**
 * Invalid parameters, grid sizes or names.
 */
#define PEQ_ERR_CONFIG 2

/**
 * Non-finite values or the blow-up guard tripped; the state is unchanged.
 */
#define PEQ_ERR_BLOWUP 3

/**
 * File could not be read or written, or is malformed.
 */
#define PEQ_ERR_IO 4

/**
 * A required pointer argument was null.
 */
#define PEQ_ERR_NULL 5

/**
 * A caller buffer has the wrong length.
 */
#define PEQ_ERR_BUFFER 6

/**
 * Internal panic caught at the boundary.
 */
#define PEQ_ERR_PANIC 7

#define PEQ_FIELD_V1 0

#define PEQ_FIELD_V2 1

#define PEQ_FIELD_T 2

#define PEQ_SCHEME_RK3 0

#define PEQ_SCHEME_RK2 1

#define PEQ_SCHEME_EULER 2

/**
 * Opaque solver state.
 */
typedef struct PeqState PeqState;

typedef struct {
  double h;
  double f0;
  double nu_h;
  double nu_z;
  double kappa_h;
  double eps;
} PeqParams;

/**
 * Monitored norms, in the column order of the diagnostics CSV.
 */
typedef struct {
  double time;
  double l2_v;
  double l6_v;
  double linf_t;
  double l2_t;
  double l2_grad_v;
  double l2_grad_h_t;
  double l2_grad_h_vbar;
  double l2_lapl_h_vbar;
  double l6_dz_v;
  double l2_grad_u;
  double l2_lapl2_u;
  double l2_lapl_h_v;
  double l2_lapl_t;
  double energy_residual;
  double symmetry_residual;
  double u_eq_residual;
} PeqDiagRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *peq_last_error(void);

/**
 * Writes the default parameters (`h = 1`, unit viscosities and
 * diffusivity, no rotation, no regularization) to `out`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `PeqParams`.
 */
int32_t peq_params_default(PeqParams *out);

/**
 * Builds a named initial condition (`rest`, `inertial`, `mode-decay`,
 * `thermal`, `random-H`) on an `nx x ny x nz` grid of half-height `h`.
 *
 * # Safety
 * `preset` must be null or a nul-terminated string; `out` must be null or
 * writable.
 */
int32_t peq_state_new_preset(size_t nx,
                             size_t ny,
                             size_t nz,
                             double h,
                             const char *preset,
                             uint64_t seed,
                             size_t modes,
                             double amplitude,
                             PeqState **out);

/**
 * Builds a state from physical samples, each `nx*ny*nz` values long with
 * z fastest, then y, then x.
 *
 * # Safety
 * The three arrays must each hold `nx*ny*nz` readable doubles; `out` must
 * be null or writable.
 */
int32_t peq_state_from_arrays(size_t nx,
                              size_t ny,
                              size_t nz,
                              double h,
                              const double *v1,
                              const double *v2,
                              const double *t,
                              double time,
                              PeqState **out);

/**
 * Releases a state. Null is ignored.
 *
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void peq_state_free(PeqState *state);

/**
 * Deep copy of a state.
 *
 * # Safety
 * `state` must be a live handle or null; `out` must be null or writable.
 */
int32_t peq_state_clone(const PeqState *state, PeqState **out);

/**
 * Grid sizes and current time.
 *
 * # Safety
 * All pointers must be live or null.
 */
int32_t peq_state_info(const PeqState *state, size_t *nx, size_t *ny, size_t *nz, double *time);

/**
 * Copies one field (`PEQ_FIELD_*`) into `buf`, which must hold exactly
 * `nx*ny*nz` values.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
int32_t peq_state_get_field(const PeqState *state, uint32_t field, double *buf, size_t len);

/**
 * Advances the state by one step of size `dt` with scheme `PEQ_SCHEME_*`.
 * On failure the state is left unchanged.
 *
 * # Safety
 * Pointers must be live or null.
 */
int32_t peq_step(PeqState *state, const PeqParams *params, uint32_t scheme_code, double dt);

/**
 * Integrates up to `t_end`. `dt <= 0` selects the CFL step with number
 * `cfl`. On failure the state is left unchanged.
 *
 * # Safety
 * Pointers must be live or null.
 */
int32_t peq_advance(PeqState *state,
                    const PeqParams *params,
                    uint32_t scheme_code,
                    double t_end,
                    double dt,
                    double cfl);

/**
 * Advective CFL step for Courant number `cfl`, capped at 0.1.
 *
 * # Safety
 * Pointers must be live or null.
 */
int32_t peq_cfl_dt(const PeqState *state, const PeqParams *params, double cfl, double *out);

/**
 * Fills `out` with every monitored norm and residual.
 *
 * # Safety
 * Pointers must be live or null.
 */
int32_t peq_norm_panel(const PeqState *state, const PeqParams *params, PeqDiagRecord *out);

/**
 * Writes a binary checkpoint of `state` and `params` to `path`.
 *
 * # Safety
 * `path` must be a nul-terminated string; other pointers live or null.
 */
int32_t peq_checkpoint_write(const PeqState *state, const PeqParams *params, const char *path);

/**
 * Reads a checkpoint into a new state and its stored parameters.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` and `params` must be null
 * or writable.
 */
int32_t peq_checkpoint_read(const char *path, PeqState **out, PeqParams *params);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIMEQ_H */
