/* C ABI for the dpsim differentially private selection mechanisms. */

#ifndef DPSIM_H
#define DPSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Sensitivity-bounding selector.
typedef enum DpsimBounding {
  DPSIM_BOUNDING_NONE = 0,
  DPSIM_BOUNDING_SCALED = 1,
  DPSIM_BOUNDING_CLIPPED = 2,
} DpsimBounding;

// Mechanism family selector.
typedef enum DpsimMechanism {
  DPSIM_MECHANISM_RR = 0,
  DPSIM_MECHANISM_SNM = 1,
} DpsimMechanism;

// Noise family selector for SNM.
typedef enum DpsimNoise {
  DPSIM_NOISE_GUMBEL = 0,
  DPSIM_NOISE_EXPONENTIAL = 1,
  DPSIM_NOISE_LAPLACE = 2,
} DpsimNoise;

// Status codes returned by every fallible entry point.
typedef enum DpsimStatus {
  DPSIM_STATUS_OK = 0,
  // Malformed values (empty or non-finite scores, length mismatches).
  DPSIM_STATUS_INVALID_INPUT = 1,
  // Out-of-range mechanism parameters (epsilon, delta, rate, trials).
  DPSIM_STATUS_INVALID_PARAMETER = 2,
  // Inconsistent configuration (e.g. clipping without public scores).
  DPSIM_STATUS_INVALID_CONFIG = 3,
  // A caller contract was violated.
  DPSIM_STATUS_CONTRACT_VIOLATION = 4,
  // Dataset / IO failures (unused by the mechanism surface).
  DPSIM_STATUS_DATA_ERROR = 5,
  // A required pointer was NULL.
  DPSIM_STATUS_NULL_POINTER = 6,
  // An internal panic was caught at the boundary.
  DPSIM_STATUS_INTERNAL_ERROR = 7,
} DpsimStatus;

// Opaque random-stream handle.
typedef struct DpsimRng DpsimRng;

// Full mechanism configuration.
typedef struct DpsimMechanismConfig {
  enum DpsimMechanism mechanism;
  enum DpsimNoise noise;
  double epsilon;
  double delta;
  enum DpsimBounding bounding;
} DpsimMechanismConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Explanation of the most recent failure on this thread. Valid until the
// next failing call on the same thread; never NULL.
const char *dpsim_last_error_message(void);

// Create a deterministic random stream from a seed. Free with
// [`dpsim_rng_free`].
struct DpsimRng *dpsim_rng_new(uint64_t seed);

// # Safety
// `rng` must be a pointer returned by [`dpsim_rng_new`] that has not been
// freed, or NULL (a no-op).
void dpsim_rng_free(struct DpsimRng *rng);

// Min-max scale `scores` into `[0,1]`; all zeros when every score is equal.
//
// # Safety
// `scores` and `out` must point to `len` doubles; `out` must be writable.
enum DpsimStatus dpsim_scale_scores(const double *scores, size_t len, double *out);

// Clip each private score into `[public - delta/2, public + delta/2]`.
//
// # Safety
// `private_scores`, `public_scores` and `out` must point to `len` doubles.
enum DpsimStatus dpsim_clip_scores(const double *private_scores,
                                   const double *public_scores,
                                   size_t len,
                                   double delta,
                                   double *out);

// Randomized Response selection probabilities (boosted argmax, uniform
// elsewhere).
//
// # Safety
// `scores` and `out_probs` must point to `len` doubles.
enum DpsimStatus dpsim_rr_distribution(const double *scores,
                                       size_t len,
                                       double epsilon,
                                       double *out_probs);

// Exponential-mechanism selection probabilities
// `p_i = exp(s_i eps / 2 delta) / sum_j exp(s_j eps / 2 delta)`.
//
// # Safety
// `scores` and `out_probs` must point to `len` doubles.
enum DpsimStatus dpsim_exp_mech_distribution(const double *scores,
                                             size_t len,
                                             double epsilon,
                                             double delta,
                                             double *out_probs);

// One Randomized Response selection.
//
// # Safety
// `scores` must point to `len` doubles; `rng` must be a live handle;
// `out_index` must be writable.
enum DpsimStatus dpsim_rr_select(const double *scores,
                                 size_t len,
                                 double epsilon,
                                 struct DpsimRng *rng,
                                 size_t *out_index);

// One Select Noisy Max selection on already-bounded scores: i.i.d. noise at
// rate `epsilon / (2 delta)` is added to each score and the noisy argmax
// index is returned.
//
// # Safety
// `scores` must point to `len` doubles; `rng` must be a live handle;
// `out_index` must be writable.
enum DpsimStatus dpsim_snm_select(const double *scores,
                                  size_t len,
                                  enum DpsimNoise noise,
                                  double epsilon,
                                  double delta,
                                  struct DpsimRng *rng,
                                  size_t *out_index);

// One draw from a noise family at rate `rate` (scale `1/rate`).
//
// # Safety
// `rng` must be a live handle; `out_value` must be writable.
enum DpsimStatus dpsim_sample_noise(enum DpsimNoise noise,
                                    double rate,
                                    struct DpsimRng *rng,
                                    double *out_value);

// Monte Carlo estimate of a configured mechanism's selection distribution:
// bounding is applied per `config`, the mechanism runs `trials` times, and
// normalized frequencies are written to `out_probs`.
//
// `public_scores` may be NULL unless `config.bounding` is clipped.
//
// # Safety
// `scores` (and `public_scores` when non-NULL) must point to `len` doubles;
// `rng` must be a live handle; `out_probs` must hold `len` doubles.
enum DpsimStatus dpsim_estimate_distribution(struct DpsimMechanismConfig config,
                                             const double *scores,
                                             size_t len,
                                             const double *public_scores,
                                             uint64_t trials,
                                             struct DpsimRng *rng,
                                             double *out_probs);

// Empirical ε-DP check: the maximum absolute log probability ratio between
// the mechanism's selection distributions on `scores_a` and `scores_b`
// (exact where closed forms exist, Monte Carlo with `trials` runs per side
// otherwise). The result can be infinite when mass vanishes on exactly one
// side of an index; compare against `epsilon` plus statistical slack.
//
// # Safety
// `scores_a`, `scores_b` (and `public_scores` when non-NULL) must point to
// `len` doubles; `rng` must be a live handle; `out_ratio` must be writable.
enum DpsimStatus dpsim_verify_dp_ratio(struct DpsimMechanismConfig config,
                                       const double *scores_a,
                                       const double *scores_b,
                                       size_t len,
                                       const double *public_scores,
                                       uint64_t trials,
                                       struct DpsimRng *rng,
                                       double *out_ratio);

// Expected value `sum_i probs[i] * values[i]`.
//
// # Safety
// `probs` and `values` must point to `len` doubles; `out_value` must be
// writable.
enum DpsimStatus dpsim_expected_value(const double *probs,
                                      const double *values,
                                      size_t len,
                                      double *out_value);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DPSIM_H */
