#ifndef KKWAVE_H
#define KKWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum KkStatus {
  KK_STATUS_OK = 0,
  KK_STATUS_NULL_POINTER = 1,
  KK_STATUS_DOMAIN = 2,
  KK_STATUS_PRECONDITION = 3,
  KK_STATUS_NEAR_BT = 4,
  KK_STATUS_NO_CONVERGENCE = 5,
  KK_STATUS_BRACKET = 6,
  KK_STATUS_INSTABILITY = 7,
  KK_STATUS_CONFIG = 8,
  KK_STATUS_IO = 9,
  KK_STATUS_OUT_OF_RANGE = 10,
  KK_STATUS_BUFFER_TOO_SMALL = 11,
  KK_STATUS_PANIC = 12,
} KkStatus;

typedef enum KkEquilibriumKind {
  KK_EQUILIBRIUM_KIND_SADDLE = 0,
  KK_EQUILIBRIUM_KIND_STABLE_NODE = 1,
  KK_EQUILIBRIUM_KIND_UNSTABLE_NODE = 2,
  KK_EQUILIBRIUM_KIND_STABLE_FOCUS = 3,
  KK_EQUILIBRIUM_KIND_UNSTABLE_FOCUS = 4,
  KK_EQUILIBRIUM_KIND_NON_HYPERBOLIC = 5,
} KkEquilibriumKind;

typedef enum KkBranch {
  KK_BRANCH_GAMMA_PLUS = 0,
  KK_BRANCH_GAMMA_MINUS = 1,
} KkBranch;

/**
 * Opaque fixed-period cycle family.
 */
typedef struct KkCycleFamily KkCycleFamily;

/**
 * Opaque list of equilibria.
 */
typedef struct KkEquilibria KkEquilibria;

/**
 * Opaque traced Hopf curve.
 */
typedef struct KkHopfCurve KkHopfCurve;

typedef struct KkCusp {
  double q_g;
  double v_g;
  double v_c;
  double theta_bt;
  double ve3;
  double residual;
} KkCusp;

typedef struct KkDbt {
  double a3;
  double b2;
  bool saddle_case;
} KkDbt;

typedef struct KkEquilibrium {
  double v_c;
  enum KkEquilibriumKind kind;
  double l1_re;
  double l1_im;
  double l2_re;
  double l2_im;
  /**
   * Trace of the linearization.
   */
  double b;
  double c;
  /**
   * `v_e'(v_c)`.
   */
  double ve1;
  /**
   * `v_e(v_c) - v_c`.
   */
  double residual;
} KkEquilibrium;

typedef struct KkHopfPoint {
  double q_g;
  double v_g;
  double v_c;
  double omega0;
  /**
   * NaN where `omega0` is too small for a meaningful value.
   */
  double ell1;
  double residual;
} KkHopfPoint;

typedef struct KkBtPoint {
  double q_g;
  double v_g;
  double v_c;
  double theta0;
  enum KkBranch branch;
} KkBtPoint;

typedef struct KkCycleInfo {
  double q_g;
  double v_g;
  double period;
  double amplitude;
  double floquet_multiplier;
  double closure;
  bool stable;
} KkCycleInfo;

/**
 * Library version as a static NUL-terminated string.
 */
const char *kk_version(void);

/**
 * Copy the calling thread's last error message into `buf` (`len` bytes).
 * Returns the size needed including the NUL; nothing is written when `len`
 * is too small.
 */
uintptr_t kk_last_error(char *buf, uintptr_t len);

/**
 * Cusp point `K` of the fold curve.
 *
 * # Safety
 * `out` must be null or point to writable storage for a `KkCusp`.
 */
enum KkStatus kk_cusp_point(struct KkCusp *out);

/**
 * Degenerate Takens-Bogdanov coefficients at the cusp.
 *
 * # Safety
 * `out` must be null or point to writable storage for a `KkDbt`.
 */
enum KkStatus kk_dbt_coefficients(struct KkDbt *out);

/**
 * All critical points at `(theta0, q_g, v_g)` with the standard constants.
 *
 * # Safety
 * `out` must be null or point to writable storage for a handle pointer.
 */
enum KkStatus kk_equilibria_find(double theta0, double q_g, double v_g, struct KkEquilibria **out);

/**
 * Number of equilibria in `h` (0 for a null handle).
 *
 * # Safety
 * `h` must be null or a live handle from [`kk_equilibria_find`].
 */
uintptr_t kk_equilibria_len(const struct KkEquilibria *h);

/**
 * # Safety
 * `h` must be null or a live handle; `out` null or writable.
 */
enum KkStatus kk_equilibria_get(const struct KkEquilibria *h,
                                uintptr_t i,
                                struct KkEquilibrium *out);

/**
 * # Safety
 * `h` must be null or a live handle, and is invalid afterwards.
 */
void kk_equilibria_free(struct KkEquilibria *h);

/**
 * First Lyapunov coefficient at `(q_g, v_g)`, evaluated at the interior
 * equilibrium (returned in `v_c`) with `theta0 = (v_c + v_g)^2`, by the
 * closed form and by the normal-form coefficients.
 *
 * # Safety
 * `v_c`, `closed_form` and `via_g` must be null or writable.
 */
enum KkStatus kk_lyapunov(double q_g, double v_g, double *v_c, double *closed_form, double *via_g);

/**
 * Hopf curve started at the `gamma-` Takens-Bogdanov point at `q_g`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum KkStatus kk_hopf_from_bt(double q_g, uintptr_t max_steps, struct KkHopfCurve **out);

/**
 * Hopf curve through the point at `(theta0, q_g)`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum KkStatus kk_hopf_through(double theta0,
                              double q_g,
                              uintptr_t max_steps,
                              struct KkHopfCurve **out);

/**
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t kk_hopf_len(const struct KkHopfCurve *h);

/**
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t kk_hopf_gh_count(const struct KkHopfCurve *h);

/**
 * # Safety
 * `h` must be null or a live handle; `out` null or writable.
 */
enum KkStatus kk_hopf_point(const struct KkHopfCurve *h, uintptr_t i, struct KkHopfPoint *out);

/**
 * # Safety
 * `h` must be null or a live handle; `out` null or writable.
 */
enum KkStatus kk_hopf_gh(const struct KkHopfCurve *h, uintptr_t i, struct KkHopfPoint *out);

/**
 * Endpoint of the curve: `which = 0` for the start, `1` for the end.
 * Fails with `OutOfRange` when that end is not a BT point.
 *
 * # Safety
 * `h` must be null or a live handle; `out` null or writable.
 */
enum KkStatus kk_hopf_bt(const struct KkHopfCurve *h, uint32_t which, struct KkBtPoint *out);

/**
 * # Safety
 * `h` must be null or a live handle, and is invalid afterwards.
 */
void kk_hopf_free(struct KkHopfCurve *h);

/**
 * Family of cycles of period `period` grown from the Hopf point at
 * `(theta0, q_g)` for at most `max_steps` steps.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum KkStatus kk_cycle_family(double theta0,
                              double q_g,
                              double period,
                              uintptr_t max_steps,
                              struct KkCycleFamily **out);

/**
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t kk_cycle_family_len(const struct KkCycleFamily *h);

/**
 * # Safety
 * `h` must be null or a live handle; `out` null or writable.
 */
enum KkStatus kk_cycle_info(const struct KkCycleFamily *h, uintptr_t i, struct KkCycleInfo *out);

/**
 * JSON export of member `i` (the format read by `kkwave pde --cycle`),
 * written NUL-terminated into `buf`. `needed` receives the size including
 * the NUL; the status is `BufferTooSmall` when `len` is less than that.
 *
 * # Safety
 * `h` must be null or a live handle; `buf` must hold `len` bytes or be null;
 * `needed` null or writable.
 */
enum KkStatus kk_cycle_json(const struct KkCycleFamily *h,
                            uintptr_t i,
                            char *buf,
                            uintptr_t len,
                            uintptr_t *needed);

/**
 * # Safety
 * `h` must be null or a live handle, and is invalid afterwards.
 */
void kk_cycle_family_free(struct KkCycleFamily *h);

#endif  /* KKWAVE_H */
