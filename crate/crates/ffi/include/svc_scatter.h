#ifndef SVC_SCATTER_H
#define SVC_SCATTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SvcStatus {
  SvcStatusOk = 0,
  /**
   * A pointer argument was null.
   */
  SvcStatusNullArgument = 1,
  /**
   * The potential parameters violate a validity constraint.
   */
  SvcStatusInvalidSpec = 2,
  /**
   * An index or energy is outside its valid range.
   */
  SvcStatusOutOfRange = 3,
  /**
   * Internal numerical failure; details via svc_last_error.
   */
  SvcStatusInternal = 4,
} SvcStatus;

/**
 * Opaque potential handle.
 */
typedef struct SvcSpec SvcSpec;

/**
 * One scattering evaluation. When `underflowed` is nonzero, `t`
 * underflowed f64 range and `log10_t` carries the magnitude.
 */
typedef struct SvcPoint {
  double t;
  double r;
  double log10_t;
  int32_t underflowed;
} SvcPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf`
 * (NUL-terminated, truncated to `len` bytes) and returns the full
 * message length in bytes excluding the NUL. `buf` may be null to
 * query the length.
 */
uintptr_t svc_last_error(char *buf, uintptr_t len);

/**
 * Creates an SVC(rho, n) potential at stage `g` with height `v` over
 * span `l`. On success writes the new handle to `out`.
 */
enum SvcStatus svc_spec_new(double rho,
                            double n,
                            uint32_t g,
                            double v,
                            double l,
                            struct SvcSpec **out);

/**
 * Like svc_spec_new, with the stage exponent replaced by the
 * polynomial a0 + a1 g + ... given by `coeffs[0..coeff_count]`.
 */
enum SvcStatus svc_spec_new_poly(double rho,
                                 uint32_t g,
                                 double v,
                                 double l,
                                 const double *coeffs,
                                 uintptr_t coeff_count,
                                 struct SvcSpec **out);

/**
 * Releases a handle. Null is a no-op.
 */
void svc_spec_free(struct SvcSpec *spec);

/**
 * Transmission/reflection at energy `e` via the super-periodic closed
 * form (O(G²)).
 */
enum SvcStatus svc_transmission(const struct SvcSpec *spec, double e, struct SvcPoint *out);

/**
 * Transmission at energy `e` by brute-force composition of all 2^G
 * barrier matrices (ground truth; G <= 14).
 */
enum SvcStatus svc_transmission_brute(const struct SvcSpec *spec, double e, struct SvcPoint *out);

/**
 * Barrier width l_g after g removal stages.
 */
enum SvcStatus svc_segment_length(const struct SvcSpec *spec, uint32_t g, double *out);

/**
 * Super-periodic repetition spacing s_p at hierarchy level p (1-based,
 * p <= G).
 */
enum SvcStatus svc_spacing(const struct SvcSpec *spec, uint32_t p, double *out);

/**
 * Area-preserving renormalized height V_G = L V0 / (2^G l_G).
 */
enum SvcStatus svc_renormalized_height(const struct SvcSpec *spec, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SVC_SCATTER_H */
