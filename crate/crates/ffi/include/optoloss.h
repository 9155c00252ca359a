/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef OPTOLOSS_H
#define OPTOLOSS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OptolossStatus {
  OPTOLOSS_STATUS_OK = 0,
  OPTOLOSS_STATUS_NULL_POINTER = 1,
  OPTOLOSS_STATUS_DOMAIN = 2,
  OPTOLOSS_STATUS_CONVERGENCE = 3,
  OPTOLOSS_STATUS_LEAKAGE = 4,
  OPTOLOSS_STATUS_TRUNCATION = 5,
  OPTOLOSS_STATUS_BUDGET = 6,
  OPTOLOSS_STATUS_GRID_COVERAGE = 7,
  OPTOLOSS_STATUS_STEP_UNDERFLOW = 8,
  OPTOLOSS_STATUS_INVARIANT = 9,
  OPTOLOSS_STATUS_IO = 10,
  OPTOLOSS_STATUS_PARSE = 11,
  OPTOLOSS_STATUS_PANIC = 12,
} OptolossStatus;

/**
 * Density matrix in the truncated Fock basis.
 */
typedef struct OptolossDensity OptolossDensity;

/**
 * Coupling profile g̃(τ).
 */
typedef struct OptolossProfile OptolossProfile;

/**
 * Wigner function sampled on a square grid.
 */
typedef struct OptolossWigner OptolossWigner;

typedef struct OptolossComplex {
  double re;
  double im;
} OptolossComplex;

/**
 * Propagator kernels at one time, with A = F_a + F_+F_- and G = F_- − iF_+.
 */
typedef struct OptolossFCoeffs {
  double tau;
  double f_a;
  double f_plus;
  double f_minus;
  double a;
  struct OptolossComplex g;
} OptolossFCoeffs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *optoloss_version(void);

/**
 * Message of the last error on this thread (empty after a success). The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *optoloss_last_error_message(void);

enum OptolossStatus optoloss_profile_constant(double g0, struct OptolossProfile **out);

/**
 * Monotone cubic interpolation through `len` samples (τ strictly increasing).
 *
 * # Safety
 * `taus` and `gs` must each point to `len` readable doubles.
 */
enum OptolossStatus optoloss_profile_tabulated(const double *taus,
                                               const double *gs,
                                               uintptr_t len,
                                               struct OptolossProfile **out);

/**
 * # Safety
 * `profile` must be null or a handle from `optoloss_profile_*` not yet freed.
 */
void optoloss_profile_free(struct OptolossProfile *profile);

enum OptolossStatus optoloss_f_coeffs(const struct OptolossProfile *profile,
                                      double tau,
                                      struct OptolossFCoeffs *out);

enum OptolossStatus optoloss_photon_number(struct OptolossComplex alpha,
                                           double kappa,
                                           double tau,
                                           double *out);

/**
 * ⟨a(τ)⟩ for |α⟩ ⊗ |β⟩.
 */
enum OptolossStatus optoloss_expect_a(struct OptolossComplex alpha,
                                      struct OptolossComplex beta,
                                      const struct OptolossProfile *profile,
                                      double kappa,
                                      double tau,
                                      struct OptolossComplex *out);

/**
 * ⟨a(τ)⟩ for |α⟩ with thermal mechanics of mean occupation `nbar`.
 */
enum OptolossStatus optoloss_expect_a_thermal(struct OptolossComplex alpha,
                                              double nbar,
                                              const struct OptolossProfile *profile,
                                              double kappa,
                                              double tau,
                                              struct OptolossComplex *out);

enum OptolossStatus optoloss_cat_fidelity(struct OptolossComplex alpha,
                                          double g0,
                                          double kappa,
                                          double *out);

enum OptolossStatus optoloss_fidelity_bounds(struct OptolossComplex alpha,
                                             double kappa,
                                             double *lower,
                                             double *upper);

/**
 * Pure ideal cat on `levels` Fock levels.
 */
enum OptolossStatus optoloss_ideal_cat_density(struct OptolossComplex alpha,
                                               double g0,
                                               uintptr_t levels,
                                               struct OptolossDensity **out);

/**
 * Reduced cavity state at τ = 2π for |α⟩ ⊗ |0⟩ with loss `kappa`.
 */
enum OptolossStatus optoloss_noisy_cat_density(struct OptolossComplex alpha,
                                               double g0,
                                               double kappa,
                                               uintptr_t n_cav,
                                               uintptr_t n_mech,
                                               double leak_tol,
                                               struct OptolossDensity **out);

enum OptolossStatus optoloss_density_side(const struct OptolossDensity *rho, uintptr_t *out);

enum OptolossStatus optoloss_density_element(const struct OptolossDensity *rho,
                                             uintptr_t row,
                                             uintptr_t col,
                                             struct OptolossComplex *out);

/**
 * # Safety
 * `rho` must be null or a live density handle.
 */
void optoloss_density_free(struct OptolossDensity *rho);

/**
 * W on a `count` × `count` grid spanning [min, max] in both X and P. Fails with
 * `GridCoverage` when the grid misses part of the state.
 */
enum OptolossStatus optoloss_wigner(const struct OptolossDensity *rho,
                                    double min,
                                    double max,
                                    uintptr_t count,
                                    struct OptolossWigner **out);

/**
 * W at grid point (X index `i`, P index `j`).
 */
enum OptolossStatus optoloss_wigner_value(const struct OptolossWigner *w,
                                          uintptr_t i,
                                          uintptr_t j,
                                          double *out);

enum OptolossStatus optoloss_wigner_negativity(const struct OptolossWigner *w, double *out);

/**
 * # Safety
 * `w` must be null or a live Wigner handle.
 */
void optoloss_wigner_free(struct OptolossWigner *w);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPTOLOSS_H */
