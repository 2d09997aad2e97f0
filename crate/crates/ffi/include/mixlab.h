#ifndef MIXLAB_H
#define MIXLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MixlabStatus {
  MIXLAB_STATUS_OK = 0,
  MIXLAB_STATUS_NULL_POINTER = 1,
  MIXLAB_STATUS_INVALID_ARGUMENT = 2,
  MIXLAB_STATUS_INVALID_TABLE = 3,
  MIXLAB_STATUS_GRAZING = 4,
  MIXLAB_STATUS_CAP_EXCEEDED = 5,
  MIXLAB_STATUS_NO_GAP = 6,
  MIXLAB_STATUS_NO_CONVERGENCE = 7,
  MIXLAB_STATUS_INTERNAL = 8,
} MixlabStatus;

/**
 * Opaque base map with its roof.
 */
typedef struct MixlabGm MixlabGm;

/**
 * Opaque billiard table.
 */
typedef struct MixlabTable MixlabTable;

/**
 * A point of the collision section.
 */
typedef struct MixlabCollision {
  size_t component;
  /**
   * Angle on circular components, arclength on straight ones.
   */
  double param;
  /**
   * Outgoing angle from the inward normal, in [-pi/2, pi/2].
   */
  double phi;
} MixlabCollision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after a success).
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *mixlab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mixlab_version(void);

/**
 * Lorentz gas on the unit torus with `n` disks; `centers` holds `2n` values.
 *
 * # Safety
 * `centers` must point to `2n` doubles, `radii` to `n` doubles, `out` to a
 * writable handle slot.
 */
enum MixlabStatus mixlab_table_lorentz(const double *centers,
                                       const double *radii,
                                       size_t n,
                                       struct MixlabTable **out);

/**
 * Bunimovich stadium with straight half-length `a` and cap radius `rho`.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum MixlabStatus mixlab_table_stadium(double a, double rho, struct MixlabTable **out);

/**
 * # Safety
 * `table` must come from a `mixlab_table_*` constructor and not be used afterwards.
 */
void mixlab_table_free(struct MixlabTable *table);

/**
 * Number of boundary components of `table`, or 0 for a null handle.
 *
 * # Safety
 * `table` must be a live handle or null.
 */
size_t mixlab_table_components(const struct MixlabTable *table);

/**
 * One step of the billiard map. `flight_time` may be null.
 *
 * # Safety
 * Pointers must be valid; `input` and `output` may alias.
 */
enum MixlabStatus mixlab_billiard_map(const struct MixlabTable *table,
                                      const struct MixlabCollision *input,
                                      struct MixlabCollision *output,
                                      double *flight_time);

/**
 * `n` independent draws from the invariant collision measure.
 *
 * # Safety
 * `out` must point to `n` writable collisions.
 */
enum MixlabStatus mixlab_sample_invariant(const struct MixlabTable *table,
                                          uint64_t seed,
                                          size_t n,
                                          struct MixlabCollision *out);

/**
 * Built-in base map (`doubling`, `gauss`, `lsv_induced`) with a polynomial
 * roof `sum coeffs[k] y^k`. `alpha` is read only by `lsv_induced`.
 *
 * # Safety
 * `name` must be NUL-terminated, `coeffs` must point to `n_coeffs` doubles and
 * `out` to a writable handle slot.
 */
enum MixlabStatus mixlab_gm_new(const char *name,
                                double alpha,
                                const double *coeffs,
                                size_t n_coeffs,
                                struct MixlabGm **out);

/**
 * # Safety
 * `gm` must come from [`mixlab_gm_new`] and not be used afterwards.
 */
void mixlab_gm_free(struct MixlabGm *gm);

/**
 * Leading eigenvalue of the twisted transfer operator at `s = re + i im`.
 *
 * # Safety
 * `gm` must be a live handle; `re_out` and `im_out` must be writable.
 */
enum MixlabStatus mixlab_gm_leading_eigenvalue(const struct MixlabGm *gm,
                                               double re,
                                               double im,
                                               size_t resolution,
                                               double *re_out,
                                               double *im_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXLAB_H */
