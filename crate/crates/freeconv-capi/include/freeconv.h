#ifndef FREECONV_H
#define FREECONV_H

/* Generated by cbindgen from the freeconv-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result discriminant of every fallible call.
typedef enum FcStatus {
  // The call succeeded.
  FC_STATUS_OK = 0,
  // A required pointer argument was null.
  FC_STATUS_NULL_POINTER = 1,
  // Arguments or measure specifications failed to parse or validate.
  FC_STATUS_SPEC_ERROR = 2,
  // A solver, bracketing or evaluation stage failed.
  FC_STATUS_NUMERICS_ERROR = 3,
  // The library caught an internal panic; treat the handle state as lost.
  FC_STATUS_PANIC = 4,
} FcStatus;

// Opaque handle to a tabulated density grid.
typedef struct FcDensity FcDensity;

// Opaque handle to an input measure.
typedef struct FcMeasure FcMeasure;

// A complex number passed by value across the boundary.
typedef struct FcComplex {
  double re;
  double im;
} FcComplex;

// Support interval and square-root edge data of a free convolution.
// Index 0 of each pair belongs to the lower edge, index 1 to the upper.
typedef struct FcSupport {
  // Lower endpoint of the support interval.
  double e_minus;
  // Upper endpoint of the support interval.
  double e_plus;
  // Boundary values of the first subordination function at the edges.
  double omega_alpha[2];
  // Boundary values of the second subordination function at the edges.
  double omega_beta[2];
  // Square-root slope coefficients of omega_alpha at the edges.
  double gamma_alpha[2];
  // Square-root slope coefficients of omega_beta at the edges.
  double gamma_beta[2];
  // |f - 1| of the edge certificate at each edge.
  double edge_residuals[2];
} FcSupport;

// A solved subordination point at one spectral parameter.
typedef struct FcSubordination {
  // The spectral parameter the system was solved at.
  struct FcComplex z;
  // First subordination function at z.
  struct FcComplex omega_alpha;
  // Second subordination function at z.
  struct FcComplex omega_beta;
  // Stieltjes transform of the convolution at z.
  struct FcComplex m;
  // Fixed-point iterations spent.
  uint64_t iterations;
  // Larger defect of the two defining equations at the returned point.
  double residual;
} FcSubordination;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library; static storage, never freed.
const char *fc_version(void);

// Message of the most recent failure on the calling thread. Never null;
// empty before the first failure. The pointer stays valid until the next
// failing call on the same thread.
const char *fc_last_error_message(void);

// Semicircle law of the given variance.
enum FcStatus fc_measure_semicircle(double variance, struct FcMeasure **out);

// Arcsine law on [-radius, radius].
enum FcStatus fc_measure_arcsine(double radius, struct FcMeasure **out);

// Centered Marchenko-Pastur law of the given aspect ratio in (0, 1].
enum FcStatus fc_measure_marchenko_pastur(double ratio, struct FcMeasure **out);

// General Jacobi-type measure on [lower, upper] with edge exponents in
// (-1, 1) and an optional Chebyshev expansion of the smooth density
// factor; pass NULL / 0 for the constant factor. The measure is
// normalized to mass one and centered.
enum FcStatus fc_measure_jacobi(double lower,
                                double upper,
                                double t_minus,
                                double t_plus,
                                const double *smooth_cheb,
                                size_t n_smooth,
                                struct FcMeasure **out);

// Builds a measure from its JSON description (same schema the CLI uses).
enum FcStatus fc_measure_from_json(const char *json, struct FcMeasure **out);

// Serializes a measure back to JSON. The string must be released with
// fc_string_free.
enum FcStatus fc_measure_to_json(const struct FcMeasure *measure, char **out);

// Endpoints and variance of one measure; each output may be NULL.
enum FcStatus fc_measure_info(const struct FcMeasure *measure,
                              double *lower,
                              double *upper,
                              double *variance);

// Stieltjes transform m(z) = integral of d mu(x) / (x - z), defined off
// the real axis and at real points outside the support.
enum FcStatus fc_measure_stieltjes(const struct FcMeasure *measure,
                                   struct FcComplex z,
                                   struct FcComplex *out);

// Releases a measure handle. NULL is ignored.
void fc_measure_free(struct FcMeasure *measure);

// Releases a string returned by this library. NULL is ignored.
void fc_string_free(char *s);

// Locates the support interval of the free convolution of the two
// measures and the square-root data at both edges. `tol` is the energy
// tolerance of the edge search; 1e-12 is a good default.
enum FcStatus fc_find_support(const struct FcMeasure *mu_a,
                              const struct FcMeasure *mu_b,
                              double tol,
                              struct FcSupport *out);

// Solves the subordination system at one point of the open upper
// half-plane (z.im > 0) to the given residual tolerance.
enum FcStatus fc_solve_point(const struct FcMeasure *mu_a,
                             const struct FcMeasure *mu_b,
                             struct FcComplex z,
                             double tol,
                             struct FcSubordination *out);

// Tabulates the density, cdf and moments of the free convolution on a
// grid of `grid_n` points (at least 16) across its support. `eta` is the
// spectral offset boundary values are read at (1e-8 is a good default)
// and `tol` the solver tolerance.
enum FcStatus fc_density_build(const struct FcMeasure *mu_a,
                               const struct FcMeasure *mu_b,
                               size_t grid_n,
                               double eta,
                               double tol,
                               struct FcDensity **out);

// Number of grid points, or 0 for a null handle.
size_t fc_density_len(const struct FcDensity *density);

// Grid abscissas, ascending across the support; borrows the handle.
// Null for a null handle.
const double *fc_density_x(const struct FcDensity *density);

// Density values at the grid abscissas; borrows the handle.
const double *fc_density_rho(const struct FcDensity *density);

// Cumulative distribution values at the grid abscissas; borrows the
// handle.
const double *fc_density_cdf(const struct FcDensity *density);

// Support and edge data the grid was built on.
enum FcStatus fc_density_support(const struct FcDensity *density, struct FcSupport *out);

// Mass, mean and variance of the tabulated density; each output may be
// NULL.
enum FcStatus fc_density_moments(const struct FcDensity *density,
                                 double *mass,
                                 double *mean,
                                 double *variance);

// Cumulative distribution at a point of the closed support; points
// outside it are an error.
enum FcStatus fc_density_cdf_at(const struct FcDensity *density, double x, double *out);

// Releases a density handle. NULL is ignored.
void fc_density_free(struct FcDensity *density);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FREECONV_H */
