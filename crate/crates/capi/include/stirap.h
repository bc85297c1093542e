#ifndef STIRAP_H
#define STIRAP_H

/* Generated by cbindgen from stirap-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every ABI call.
 */
typedef enum StirapStatus {
  STIRAP_STATUS_OK = 0,
  /**
   * Invalid parameter or configuration value.
   */
  STIRAP_STATUS_CONFIG_ERROR = 1,
  /**
   * Input outside an operation's domain (bad state, bad buffer size).
   */
  STIRAP_STATUS_DOMAIN_ERROR = 2,
  /**
   * The integrator failed mid-run.
   */
  STIRAP_STATUS_INTEGRATION_ERROR = 3,
  STIRAP_STATUS_IO_ERROR = 4,
  STIRAP_STATUS_NULL_POINTER = 5,
  /**
   * Internal panic caught at the boundary.
   */
  STIRAP_STATUS_PANIC = 6,
} StirapStatus;

/**
 * Opaque recorded evolution; query through the accessor functions.
 */
typedef struct StirapTrajectory StirapTrajectory;

/**
 * System parameters; rates in units of g, times in 1/g. The protocol lasts
 * pi / (2 ramp).
 */
typedef struct StirapParams {
  double g;
  double delta;
  double ramp;
  double gamma;
  /**
   * Carrier frequency; used only by lab-frame runs.
   */
  double epsilon;
  /**
   * A [`StirapFrame`] value.
   */
  int32_t frame;
  /**
   * A [`StirapNoise`] value.
   */
  int32_t noise;
} StirapParams;

/**
 * Integrator controls. `base_step <= 0` selects the frame-appropriate
 * default.
 */
typedef struct StirapIntegrator {
  double base_step;
  double tolerance;
  uint32_t max_halvings;
  size_t record_stride;
} StirapIntegrator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *stirap_last_error_message(void);

/**
 * Single-transfer reference parameters (delta = 50).
 */
enum StirapStatus stirap_params_single_default(struct StirapParams *out);

/**
 * Two-node reference parameters (delta = 70).
 */
enum StirapStatus stirap_params_network_default(struct StirapParams *out);

/**
 * Default integrator controls (auto base step, tolerance 1e-9).
 */
enum StirapStatus stirap_integrator_default(struct StirapIntegrator *out);

/**
 * Runs the one-node transfer from |1>. On success `*out` owns a trajectory
 * handle.
 */
enum StirapStatus stirap_run_single(const struct StirapParams *params,
                                    const struct StirapIntegrator *integrator,
                                    struct StirapTrajectory **out);

/**
 * Runs two-node entanglement generation from the shared-photon state.
 * `out_trajectory` may be null when only the fidelity is wanted.
 */
enum StirapStatus stirap_run_network(const struct StirapParams *left,
                                     const struct StirapParams *right,
                                     const struct StirapIntegrator *integrator,
                                     struct StirapTrajectory **out_trajectory,
                                     double *out_fidelity);

/**
 * Number of recorded time points.
 */
enum StirapStatus stirap_trajectory_len(const struct StirapTrajectory *trajectory, size_t *out);

/**
 * Number of population columns per record.
 */
enum StirapStatus stirap_trajectory_dim(const struct StirapTrajectory *trajectory, size_t *out);

/**
 * Copies the record times into `out` (capacity in elements).
 */
enum StirapStatus stirap_trajectory_times(const struct StirapTrajectory *trajectory,
                                          double *out,
                                          size_t capacity);

/**
 * Copies populations row-major (`len * dim` elements: all levels of record
 * 0, then record 1, ...).
 */
enum StirapStatus stirap_trajectory_populations(const struct StirapTrajectory *trajectory,
                                                double *out,
                                                size_t capacity);

/**
 * Copies the final populations (`dim` elements).
 */
enum StirapStatus stirap_trajectory_final_populations(const struct StirapTrajectory *trajectory,
                                                      double *out,
                                                      size_t capacity);

/**
 * Releases a trajectory handle. Null is a no-op.
 */
void stirap_trajectory_free(struct StirapTrajectory *trajectory);

/**
 * Peak excited-state population: perturbative closed form and numerical
 * maximization.
 */
enum StirapStatus stirap_max_excited_population(const struct StirapParams *params,
                                                double *out_closed,
                                                double *out_numeric);

/**
 * Dephasing integral and the fidelity estimate 1 - gamma * integral.
 */
enum StirapStatus stirap_perturbative_fidelity(const struct StirapParams *params,
                                               double *out_integral,
                                               double *out_fidelity);

/**
 * Rigorous infidelity bound and its per-ramp scaling coefficient.
 */
enum StirapStatus stirap_fidelity_bound(const struct StirapParams *params,
                                        double *out_bound,
                                        double *out_coefficient);

/**
 * Bell fidelity after mixing in the photon-loss vacuum outcome:
 * (1 - p_loss) * fidelity_in.
 */
enum StirapStatus stirap_lossy_bell_fidelity(double fidelity_in, double p_loss, double *out);

/**
 * Success probability of the two-copy distillation step, (1 - p_loss)^2 / 2.
 */
enum StirapStatus stirap_distillation_success(double p_loss, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STIRAP_H */
