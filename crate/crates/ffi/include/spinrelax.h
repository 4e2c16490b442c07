#ifndef SPINRELAX_H
#define SPINRELAX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

typedef enum SrConvention {
  /**
   * `q` multiplies the diffusion constant only.
   */
  SR_CONVENTION_LITERAL_Q = 0,
  /**
   * Diffusion unchanged, gyromagnetic ratio and pump divided by `q`.
   */
  SR_CONVENTION_SCALED_Q = 1,
} SrConvention;

typedef enum SrSerfSolver {
  SR_SERF_SOLVER_SPECTRAL = 0,
  SR_SERF_SOLVER_FINITE_DIFFERENCE = 1,
} SrSerfSolver;

typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_INVALID_PARAMETER = 1,
  SR_STATUS_DEGENERATE_PARAMETERS = 2,
  SR_STATUS_MODE_OUT_OF_RANGE = 3,
  SR_STATUS_DEGENERACY = 4,
  SR_STATUS_INSUFFICIENT_HORIZON = 5,
  SR_STATUS_SOLVER_FAILED = 6,
  SR_STATUS_RANGE_NOT_BRACKETED = 7,
  SR_STATUS_NULL_POINTER = 8,
  SR_STATUS_BUFFER_TOO_SMALL = 9,
  SR_STATUS_PANIC = 10,
} SrStatus;

typedef struct SrModel SrModel;

typedef struct SrSerf SrSerf;

/**
 * Cell and spin parameters. Rates in 1/s, lengths in cm.
 */
typedef struct SrModelParams {
  double length;
  /**
   * Sine modes per axis.
   */
  size_t modes;
  /**
   * Interior grid points per axis of the finite-difference solvers.
   */
  size_t grid_points;
  double diffusion;
  double gyro;
  double base_rate;
  double pump_rate;
  double slow_down;
} SrModelParams;

typedef struct SrRelaxation {
  double t2;
  double gamma2;
  double delta_gamma2;
  double phase_rate;
} SrRelaxation;

typedef struct SrLinewidth {
  double w;
  double w0;
  double delta_w;
  double b_min;
  double b_max;
  size_t extensions;
} SrLinewidth;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sr_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the length needed including the NUL.
 * `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sr_last_error_message(char *buf, size_t len);

/**
 * Defaults: `L = 0.2`, 15 modes, 48 grid points, `D = 0.2`, unit gyro,
 * `Gamma0 = 20`, unit pump, no slow-down.
 */
struct SrModelParams sr_model_params_default(void);

/**
 * # Safety
 * `params` must point to a valid [`SrModelParams`]; `out` must be writable.
 */
enum SrStatus sr_model_new(const struct SrModelParams *params, struct SrModel **out);

/**
 * # Safety
 * `model` must be null or come from [`sr_model_new`] and not be freed yet.
 */
void sr_model_free(struct SrModel *model);

/**
 * `16 gamma g L^3 / (27 pi^4 D)` for a gradient `g >= 0`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_perturbation_parameter(const struct SrModel *model, double g, double *out);

/**
 * Second-order rate of mode `(m, n, l)` summed over the model's truncation.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_second_order_rate(const struct SrModel *model,
                                   double g,
                                   size_t m,
                                   size_t n,
                                   size_t l,
                                   double *out);

/**
 * Closed-form second-order rate for `m` in 1..=3.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_second_order_closed_form(const struct SrModel *model,
                                          double g,
                                          size_t m,
                                          double *out);

/**
 * Normalized free-induction decay for `B_z = g x` on `n_steps + 1` uniform
 * samples of `[0, t_end]`. `times` may be null; `re` and `im` may not. All
 * non-null buffers must hold at least `len >= n_steps + 1` values.
 *
 * # Safety
 * `model` must be a live handle; buffers must hold `len` writable values.
 */
enum SrStatus sr_fid_spectral(const struct SrModel *model,
                              double g,
                              bool subtract_offset,
                              double t_end,
                              size_t n_steps,
                              double *times,
                              double *re,
                              double *im,
                              size_t len);

/**
 * `T2`, `Gamma2`, `Gamma2(g) - Gamma2(0)` and the phase rate from the
 * spectral solver with automatic horizon.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_delta_gamma2(const struct SrModel *model, double g, struct SrRelaxation *out);

/**
 * SERF scenario with gradient `(gx, gy, gz)`, constant part compensated.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_serf_new(const struct SrModel *model,
                          double gx,
                          double gy,
                          double gz,
                          enum SrConvention convention,
                          struct SrSerf **out);

/**
 * # Safety
 * `serf` must be null or come from [`sr_serf_new`] and not be freed yet.
 */
void sr_serf_free(struct SrSerf *serf);

/**
 * Volume-averaged steady-state `S_x` at uniform field `by`.
 *
 * # Safety
 * `serf` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_serf_mean_sx(const struct SrSerf *serf,
                              double by,
                              enum SrSerfSolver solver,
                              double *out);

/**
 * Linewidth of `S_x(B_y)` and its broadening relative to the same scenario
 * without gradients, on an automatic grid of `by_points >= 5` fields.
 *
 * # Safety
 * `serf` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_serf_linewidth(const struct SrSerf *serf,
                                size_t by_points,
                                struct SrLinewidth *out);

/**
 * Relative change of `S_x` at `by` when the x and z gradient components are
 * exchanged.
 *
 * # Safety
 * `serf` must be a live handle; `out` must be writable.
 */
enum SrStatus sr_serf_symmetry_xz(const struct SrSerf *serf, double by, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINRELAX_H */
