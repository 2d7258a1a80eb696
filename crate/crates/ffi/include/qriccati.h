#ifndef QRICCATI_H
#define QRICCATI_H

#include <stdbool.h>
#include <stdint.h>

typedef enum QrStatus {
  QR_OK = 0,
  QR_NOT_APPLICABLE = 2,
  QR_NO_CONVERGENCE = 3,
  QR_INVALID_INPUT = 4,
  QR_NULL_POINTER = 5,
  QR_ESCAPED = 6,
  QR_PANIC = 7,
} QrStatus;

/**
 * Opaque handle to a parsed system.
 */
typedef struct QrSystem QrSystem;

/**
 * Raw quaternion `w + x i + y j + z k`.
 */
typedef struct QrQuaternion {
  double w;
  double x;
  double y;
  double z;
} QrQuaternion;

/**
 * Finder options. Zero in a numeric field selects the default.
 */
typedef struct QrFindOptions {
  double rel_tol;
  double abs_tol;
  uint32_t grid;
  uint32_t m0_override;
  bool strict_proof;
  bool force;
} QrFindOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a system from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum QrStatus qr_system_from_json(const char *json, struct QrSystem **out);

/**
 * Releases a system. Null is ignored.
 *
 * # Safety
 * `sys` must come from this library and not be used afterwards.
 */
void qr_system_free(struct QrSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum QrStatus qr_system_period(const struct QrSystem *sys, double *out);

/**
 * Right-hand side `q' = −(q a q + b q + q c + d)` at `(t, q)`.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum QrStatus qr_rhs(const struct QrSystem *sys,
                     double t,
                     struct QrQuaternion q,
                     struct QrQuaternion *out);

/**
 * Value at `m0·T` of the solution starting from `q0` at 0.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum QrStatus qr_poincare_map(const struct QrSystem *sys,
                              struct QrQuaternion q0,
                              uint32_t m0,
                              struct QrQuaternion *out);

/**
 * Condition report as JSON in `*json_out`. `grid = 0` uses the default.
 * Returns `QrNotApplicable` (with the report still written) when no route
 * applies.
 *
 * # Safety
 * `sys` must be a live handle and `json_out` a valid pointer.
 */
enum QrStatus qr_check_conditions(const struct QrSystem *sys, uint32_t grid, char **json_out);

/**
 * Default finder options (all fields zero or false).
 */
struct QrFindOptions qr_find_options_default(void);

/**
 * Finds a periodic solution. `opts` and `json_out` may be null. On success
 * the start value, period multiplier and residual of the main branch are
 * written to the non-null output pointers.
 *
 * # Safety
 * `sys` must be a live handle; non-null pointers must be valid.
 */
enum QrStatus qr_find_periodic(const struct QrSystem *sys,
                               const struct QrFindOptions *opts,
                               struct QrQuaternion *q0_out,
                               uint32_t *m0_out,
                               double *residual_out,
                               char **json_out);

/**
 * Reduces the sign case of `a` to case I. The reduced system goes to
 * `*out`; the transformation record, as JSON, to `*record_out` if non-null.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum QrStatus qr_reduce(const struct QrSystem *sys,
                        bool allow_negate,
                        struct QrSystem **out,
                        char **record_out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void qr_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next library call on the same thread.
 */
const char *qr_last_error(void);

/**
 * Library version as a static string.
 */
const char *qr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRICCATI_H */
