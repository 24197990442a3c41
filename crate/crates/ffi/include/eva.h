#ifndef EVA_H
#define EVA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum EvaStatus {
  EVA_STATUS_OK = 0,
  EVA_STATUS_NULL_POINTER = 1,
  EVA_STATUS_INVALID_ARGUMENT = 2,
  EVA_STATUS_INSUFFICIENT_DATA = 3,
  EVA_STATUS_NOT_CONVERGED = 4,
  // The fit has no usable covariance matrix.
  EVA_STATUS_NO_COVARIANCE = 5,
  EVA_STATUS_BUFFER_TOO_SMALL = 6,
  EVA_STATUS_INTERNAL = 7,
} EvaStatus;

// Opaque fitted model.
typedef struct EvaFit EvaFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call on the same thread.
const char *eva_last_error_message(void);

// GEV distribution function at `x`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum EvaStatus eva_gev_cdf(double mu, double sigma, double xi, double x, double *out);

// GEV quantile at non-exceedance probability `p`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum EvaStatus eva_gev_quantile(double mu, double sigma, double xi, double p, double *out);

// 1-in-`period` annual exceedance value of a GEV.
//
// # Safety
// `out` must be a valid pointer to a double.
enum EvaStatus eva_return_level(double mu, double sigma, double xi, double period, double *out);

// Exceedance counts of a log-spaced threshold schedule, written to
// `counts[0..k]`.
//
// # Safety
// `counts` must point to `capacity` writable `size_t` values.
enum EvaStatus eva_build_schedule(size_t n_observations,
                                  double q_max,
                                  double q_min,
                                  size_t k,
                                  size_t *counts,
                                  size_t capacity);

// Maximum-likelihood GEV fit to `n` annual maxima. On success `*out`
// owns a new handle.
//
// # Safety
// `maxima` must point to `n` doubles; `out` must be a valid pointer.
enum EvaStatus eva_fit_gev(const double *maxima, size_t n, struct EvaFit **out);

// Point-process fit to the values of `daily` above `threshold`, with the
// record spanning `n_years` years.
//
// # Safety
// `daily` must point to `n` doubles; `out` must be a valid pointer.
enum EvaStatus eva_fit_pot(const double *daily,
                           size_t n,
                           double threshold,
                           double n_years,
                           struct EvaFit **out);

// `(mu, sigma, xi)` of a fit.
//
// # Safety
// `fit` must be a live handle; `params` must point to 3 doubles.
enum EvaStatus eva_fit_params(const struct EvaFit *fit, double *params);

// Row-major 3×3 covariance of `(mu, sigma, xi)`.
//
// # Safety
// `fit` must be a live handle; `cov` must point to 9 doubles.
enum EvaStatus eva_fit_covariance(const struct EvaFit *fit, double *cov);

// Number of observations used and the convergence flag (1 or 0).
//
// # Safety
// `fit` must be a live handle; the out pointers must be valid.
enum EvaStatus eva_fit_info(const struct EvaFit *fit, size_t *n_used, int *converged);

// 1-in-`period` value and its delta-method standard error. `se` may be
// NULL; when the fit has no covariance `*se` is NaN.
//
// # Safety
// `fit` must be a live handle; `value` must be valid; `se` valid or NULL.
enum EvaStatus eva_fit_aep(const struct EvaFit *fit, double period, double *value, double *se);

// Releases a handle. NULL is ignored.
//
// # Safety
// `fit` must come from `eva_fit_gev`/`eva_fit_pot` and not be freed twice.
void eva_fit_free(struct EvaFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVA_H */
