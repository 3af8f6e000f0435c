#ifndef ATOMROUTE_H
#define ATOMROUTE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AtStatus {
  AT_STATUS_OK = 0,
  AT_STATUS_INVALID_ARGUMENT = 1,
  AT_STATUS_SINGULAR_PARAMETER = 2,
  AT_STATUS_NUMERICAL = 3,
  AT_STATUS_CONSISTENCY = 4,
  AT_STATUS_INSUFFICIENT_DATA = 5,
  AT_STATUS_IO = 6,
  AT_STATUS_NULL_POINTER = 7,
  AT_STATUS_PANIC = 8,
} AtStatus;

typedef struct AtBasis AtBasis;

typedef struct AtSpectrum AtSpectrum;

typedef struct AtState AtState;

// Parameters of the reduced four-well model, in the same units as `j`.
typedef struct AtParams {
  double u;
  double sigma;
  double j;
  uint32_t particles;
} AtParams;

// Site-dependent offset `nu` applied against well `target` (1, 2 or 3).
typedef struct AtField {
  double nu;
  uint32_t target;
} AtField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into this library from the same thread.
const char *at_last_error(void);

// Library version as a static NUL-terminated string.
const char *at_version(void);

// Fock basis of `particles` bosons on four wells.
//
// # Safety
// `out_basis` must be a valid pointer.
enum AtStatus at_basis_new(uint32_t particles, struct AtBasis **out_basis);

// # Safety
// `basis` must come from [`at_basis_new`] or be NULL.
void at_basis_free(struct AtBasis *basis);

// # Safety
// `basis` and `out_len` must be valid pointers.
enum AtStatus at_basis_len(const struct AtBasis *basis, size_t *out_len);

// Occupations of basis state `index`, written to `occupations[0..4]`.
//
// # Safety
// `basis` must be valid; `occupations` must hold four values.
enum AtStatus at_basis_state(const struct AtBasis *basis, size_t index, uint32_t *occupations);

// Eigendecomposition of the reduced Hamiltonian, optionally with a field.
//
// # Safety
// `basis`, `params` and `out_spectrum` must be valid; `field` may be NULL.
enum AtStatus at_spectrum_new(const struct AtBasis *basis,
                              const struct AtParams *params,
                              const struct AtField *field,
                              struct AtSpectrum **out_spectrum);

// # Safety
// `spectrum` must come from [`at_spectrum_new`] or be NULL.
void at_spectrum_free(struct AtSpectrum *spectrum);

// Copies up to `capacity` eigenvalues in ascending order and reports the
// total count in `out_len`. Pass `capacity = 0` to query the size.
//
// # Safety
// `spectrum` and `out_len` must be valid; `values` must hold `capacity`
// doubles or be NULL when `capacity` is zero.
enum AtStatus at_spectrum_eigenvalues(const struct AtSpectrum *spectrum,
                                      double *values,
                                      size_t capacity,
                                      size_t *out_len);

// Fock state with the given four occupations.
//
// # Safety
// `basis` and `out_state` must be valid; `occupations` must hold four values.
enum AtStatus at_state_fock(const struct AtBasis *basis,
                            const uint32_t *occupations,
                            struct AtState **out_state);

// # Safety
// `state` must come from this library or be NULL.
void at_state_free(struct AtState *state);

// State at time `t` under the Hamiltonian held by `spectrum`.
//
// # Safety
// All pointers must be valid.
enum AtStatus at_state_evolve(const struct AtState *state,
                              const struct AtSpectrum *spectrum,
                              double t,
                              struct AtState **out_state);

// `<N_1> .. <N_4>` written to `populations[0..4]`.
//
// # Safety
// `state` and `basis` must be valid; `populations` must hold four doubles.
enum AtStatus at_state_populations(const struct AtState *state,
                                   const struct AtBasis *basis,
                                   double *populations);

// `|<a|b>|`.
//
// # Safety
// All pointers must be valid.
enum AtStatus at_state_overlap(const struct AtState *a,
                               const struct AtState *b,
                               double *out_overlap);

// Populations of an initial Fock state sampled at `times[0..count]`,
// written row-major to `populations[0..4*count]`.
//
// # Safety
// `spectrum` must be valid, `occupations` must hold four values, `times`
// `count` doubles and `populations` `4 * count` doubles.
enum AtStatus at_populations_series(const struct AtSpectrum *spectrum,
                                    const uint32_t *occupations,
                                    const double *times,
                                    size_t count,
                                    double *populations);

// Effective edge-to-edge coupling with `n4` atoms held in the centre.
//
// # Safety
// `params` and `out_value` must be valid.
enum AtStatus at_jeff(const struct AtParams *params, uint32_t n4, double *out_value);

// Period of the resonant three-edge oscillation.
//
// # Safety
// `params` and `out_value` must be valid.
enum AtStatus at_resonant_period(const struct AtParams *params, uint32_t n4, double *out_value);

// Offset at which the resonance condition breaks down.
//
// # Safety
// `params` and `out_value` must be valid.
enum AtStatus at_sigma_crit(const struct AtParams *params, double *out_value);

// Coupling between the two untargeted wells under a field.
//
// # Safety
// All pointers must be valid.
enum AtStatus at_zeta(const struct AtParams *params,
                      const struct AtField *field,
                      uint32_t n4,
                      double *out_value);

// Complete transfer time for coupling `zeta`.
//
// # Safety
// `out_value` must be valid.
enum AtStatus at_tau(double zeta, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATOMROUTE_H */
