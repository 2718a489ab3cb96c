#ifndef DLC_H
#define DLC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>


typedef enum DlcModel {
  DLC_MODEL_LR = 0,
  DLC_MODEL_RF = 1,
  DLC_MODEL_NN = 2,
} DlcModel;

typedef enum DlcPhase {
  DLC_PHASE_UNDER_SAMPLED = 0,
  DLC_PHASE_BOTTLENECKED = 1,
  DLC_PHASE_OVER_SAMPLED = 2,
  DLC_PHASE_BOUNDARY = 3,
} DlcPhase;

typedef enum DlcRegime {
  DLC_REGIME_WIDER_ALWAYS_BETTER = 0,
  DLC_REGIME_WIDTH_IRRELEVANT = 1,
  DLC_REGIME_FINITE_OPTIMUM = 2,
  DLC_REGIME_NARROWER_ALWAYS_BETTER = 3,
  DLC_REGIME_SHALLOWER_ALWAYS_BETTER = 4,
} DlcRegime;

typedef enum DlcStatus {
  DLC_STATUS_OK = 0,
  DLC_STATUS_INVALID_ARGUMENT = 1,
  DLC_STATUS_DOMAIN = 2,
  DLC_STATUS_NO_PHYSICAL_ROOT = 3,
  DLC_STATUS_ILL_CONDITIONED = 4,
  DLC_STATUS_REGIME_AMBIGUOUS = 5,
  DLC_STATUS_NULL_POINTER = 6,
  // Deep networks with more than one hidden layer cannot be simulated.
  DLC_STATUS_UNSUPPORTED = 7,
  DLC_STATUS_PANIC = 8,
} DlcStatus;

// Opaque list of hidden-layer width ratios.
typedef struct DlcArchitecture DlcArchitecture;

typedef struct DlcScenario {
  double alpha;
  double sigma2;
  double eta;
} DlcScenario;

typedef struct DlcTheoryResult {
  // `+inf` at a divergent pole, NaN at a finite one.
  double epsilon;
  // Order parameter of a network in the under-sampled phase, else NaN.
  double z;
  enum DlcPhase phase;
  // Location of the pole when `phase` is `Boundary`, else NaN.
  double pole;
  bool divergent;
  bool multiple_roots;
} DlcTheoryResult;

typedef struct DlcOptimum {
  enum DlcRegime regime;
  // Optimal width, or NaN.
  double width;
  // Optimal depth range; `depth_lo < depth_hi` marks a tie and both are
  // -1 when there is no depth answer.
  int64_t depth_lo;
  int64_t depth_hi;
  double sigma_tilde;
} DlcOptimum;

typedef struct DlcSimEstimate {
  double mean;
  double se;
  size_t n_reps;
  size_t p;
} DlcSimEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static name of a status code.
const char *dlc_status_name(enum DlcStatus status);

// Message of the last failure on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *dlc_last_error(void);

// Create an architecture from `len` width ratios.
//
// # Safety
// `widths` must point to `len` readable doubles and `out` must be valid
// for writes.
enum DlcStatus dlc_architecture_new(const double *widths, size_t len, struct DlcArchitecture **out);

// Release an architecture. Null is ignored.
//
// # Safety
// `arch` must be null or a handle from [`dlc_architecture_new`] that has
// not been freed.
void dlc_architecture_free(struct DlcArchitecture *arch);

// Number of hidden layers, or 0 for a null handle.
//
// # Safety
// `arch` must be null or a live handle.
size_t dlc_architecture_depth(const struct DlcArchitecture *arch);

// Theoretical error of a model. `arch` may be null for `Lr`.
//
// # Safety
// `arch` must be null or a live handle; `out` must be valid for writes.
enum DlcStatus dlc_epsilon(enum DlcModel kind,
                           const struct DlcArchitecture *arch,
                           struct DlcScenario s,
                           struct DlcTheoryResult *out);

// Rescaled prior variance `sigma2 (1 - alpha) / (1 - alpha + eta^2)`.
//
// # Safety
// `out` must be valid for writes.
enum DlcStatus dlc_sigma_tilde(struct DlcScenario s, double *out);

// `K_{nu+1}(x) / K_nu(x)`.
//
// # Safety
// `out` must be valid for writes.
enum DlcStatus dlc_bessel_k_ratio(double nu, double x, double *out);

// Exact RF minus NN error for one hidden layer of width `gamma`.
//
// # Safety
// `out` must be valid for writes.
enum DlcStatus dlc_gap_exact(double gamma, struct DlcScenario s, double *out);

// Optimal common width of an RF model with `depth` hidden layers.
//
// # Safety
// `out` must be valid for writes.
enum DlcStatus dlc_rf_optimal_width(size_t depth, struct DlcScenario s, struct DlcOptimum *out);

// Optimal depth of an RF model with all widths equal to `gamma`.
//
// # Safety
// `out` must be valid for writes.
enum DlcStatus dlc_rf_optimal_depth(double gamma, struct DlcScenario s, struct DlcOptimum *out);

// Direction in which the NN error moves with width.
//
// # Safety
// `out` must be valid for writes.
enum DlcStatus dlc_nn_width_monotonicity(struct DlcScenario s, struct DlcOptimum *out);

// Monte Carlo estimate of the error at input dimension `d`, with
// `p = round(alpha d)` and widths `round(gamma_l d)`.
//
// # Safety
// `arch` must be null or a live handle; `out` must be valid for writes.
enum DlcStatus dlc_simulate(enum DlcModel kind,
                            const struct DlcArchitecture *arch,
                            struct DlcScenario s,
                            size_t d,
                            size_t n_reps,
                            uint64_t seed,
                            struct DlcSimEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLC_H */
