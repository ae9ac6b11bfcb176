#ifndef QFTSIM_H
#define QFTSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define QFT_OK 0

#define QFT_ERR_NULL_POINTER -1

#define QFT_ERR_INVALID_ARGUMENT -2

#define QFT_ERR_DIMENSION -3

#define QFT_ERR_RESOURCE_LIMIT -4

#define QFT_ERR_NOT_UNITARY -5

#define QFT_ERR_UNSUPPORTED -6

#define QFT_ERR_NUMERIC -7

#define QFT_ERR_PANIC -8

#define QFT_PHASE_LINEAR 0

#define QFT_PHASE_DELTA 1

#define QFT_PHASE_NORMALIZED_LINEAR 2

#define QFT_PHASE_NORMALIZED_DELTA 3

// Opaque output distribution in canonical state order.
typedef struct QftDistribution QftDistribution;

// Opaque square unitary matrix.
typedef struct QftUnitary QftUnitary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next `qft_*` call on the same thread.
const char *qft_last_error(void);

const char *qft_version(void);

// Ideal n-mode Fourier matrix `F[j][k] = exp(2 pi i j k / n) / sqrt(n)`.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_fourier(size_t n, struct QftUnitary **out);

// Composed butterfly circuit on `2 * paths` modes.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_butterfly(size_t paths, struct QftUnitary **out);

// Bulk-optics circuit for n = 2, 3 or 4.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_paper_circuit(size_t n, struct QftUnitary **out);

// Multimode Mach-Zehnder `F^dagger diag(exp(i f_j phi)) F`.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_mzi(size_t n, int32_t phase_kind, double phi, struct QftUnitary **out);

// Wraps a caller-supplied matrix after checking unitarity.
//
// # Safety
// `entries` must hold `2 * k * k` doubles; `out` must be a valid pointer.
int32_t qft_unitary_from_entries(size_t k, const double *entries, struct QftUnitary **out);

// Mode count, or 0 for a null handle.
//
// # Safety
// `u` must be null or a live handle.
size_t qft_unitary_dim(const struct QftUnitary *u);

// # Safety
// `u` must be a live handle; `re` and `im` valid pointers.
int32_t qft_unitary_get(const struct QftUnitary *u, size_t row, size_t col, double *re, double *im);

// Writes 1 to `equivalent` when `u` passes the Fourier-equivalence check.
//
// # Safety
// `u` must be a live handle; `equivalent` a valid pointer.
int32_t qft_is_fourier_equivalent(const struct QftUnitary *u, int32_t *equivalent);

// # Safety
// `u` must be null or a handle not yet freed.
void qft_unitary_free(struct QftUnitary *u);

// Permanent of a `k x k` complex matrix; `k = 0` gives 1.
//
// # Safety
// `entries` must hold `2 * k * k` doubles (may be null when `k = 0`).
int32_t qft_permanent(size_t k, const double *entries, double *re, double *im);

// Indistinguishable-photon output distribution for `input` (`modes` counts).
//
// # Safety
// `u` must be a live handle, `input` must hold `modes` values, `out` valid.
int32_t qft_quantum_distribution(const struct QftUnitary *u,
                                 const size_t *input,
                                 size_t modes,
                                 struct QftDistribution **out);

// Distinguishable-photon output distribution.
//
// # Safety
// Same as `qft_quantum_distribution`.
int32_t qft_classical_distribution(const struct QftUnitary *u,
                                   const size_t *input,
                                   size_t modes,
                                   struct QftDistribution **out);

// Number of output states, or 0 for a null handle.
//
// # Safety
// `d` must be null or a live handle.
size_t qft_distribution_len(const struct QftDistribution *d);

// # Safety
// `d` must be null or a live handle.
size_t qft_distribution_modes(const struct QftDistribution *d);

// # Safety
// `d` must be null or a live handle.
size_t qft_distribution_photons(const struct QftDistribution *d);

// State `index` in canonical order: occupations into `occupation`
// (`qft_distribution_modes` values) and its probability into `probability`.
// `occupation` may be null when only the probability is wanted.
//
// # Safety
// `d` must be a live handle; non-null buffers must be large enough.
int32_t qft_distribution_get(const struct QftDistribution *d,
                             size_t index,
                             size_t *occupation,
                             double *probability);

// Probability mass on states the zero-transmission rule suppresses; needs
// n photons in n modes.
//
// # Safety
// `d` must be a live handle; `out` a valid pointer.
int32_t qft_violation_ratio(const struct QftDistribution *d, double *out);

// Pair-correlation witness and its distinguishable-photon bound `1 - 1/n`.
//
// # Safety
// `d` must be a live handle; `g_bar` and `bound` valid pointers.
int32_t qft_witness(const struct QftDistribution *d, double *g_bar, double *bound);

// # Safety
// `d` must be null or a handle not yet freed.
void qft_distribution_free(struct QftDistribution *d);

// One-photon-per-output coincidence probability of the n-mode MZI.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_coincidence_probability(size_t n, int32_t phase_kind, double phi, double *out);

// Fisher information of the count model at fringe value `p` and slope `dp`.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_fisher_information(double p, double dp, double visibility, double *out);

// Closed-form best sensitivity of the delta scheme at unit visibility.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_ideal_delta_sensitivity(size_t n, double *out);

// Smallest visibility at which the best sensitivity beats the shot-noise
// limit; `+inf` when even unit visibility does not.
//
// # Safety
// `out` must be a valid pointer.
int32_t qft_visibility_threshold(size_t n, int32_t phase_kind, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFTSIM_H */
