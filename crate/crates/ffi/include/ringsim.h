#ifndef RINGSIM_H
#define RINGSIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RingsimStatus {
  RINGSIM_STATUS_OK = 0,
  RINGSIM_STATUS_NULL_POINTER = 1,
  RINGSIM_STATUS_INVALID_UTF8 = 2,
  RINGSIM_STATUS_INVALID_INPUT = 3,
  RINGSIM_STATUS_PARSE = 4,
  RINGSIM_STATUS_GEOMETRY = 5,
  RINGSIM_STATUS_SINGULARITY = 6,
  RINGSIM_STATUS_NUMERIC = 7,
  RINGSIM_STATUS_STATISTICS = 8,
  RINGSIM_STATUS_ACCURACY = 9,
  RINGSIM_STATUS_SCHEDULE = 10,
  RINGSIM_STATUS_IO = 11,
  RINGSIM_STATUS_BUFFER_TOO_SMALL = 12,
  RINGSIM_STATUS_PANIC = 13,
} RingsimStatus;

/**
 * Finished ensemble run with its probe trace.
 */
typedef struct RingsimResult RingsimResult;

/**
 * Parsed scenario.
 */
typedef struct RingsimScenario RingsimScenario;

/**
 * Static properties of a straight two-wire guide cross-section, SI units.
 */
typedef struct RingsimGuideTrap {
  /**
   * T/m
   */
  double gradient;
  /**
   * T
   */
  double saddle_field;
  /**
   * m from the zero
   */
  double saddle_distance;
  /**
   * K, with the configured moment
   */
  double depth;
  /**
   * m
   */
  double loss_radius;
  /**
   * Hz
   */
  double frequency;
} RingsimGuideTrap;

/**
 * Peak-train parameters in the order of the fit report.
 */
typedef struct RingsimPeakTrain {
  double n0;
  double t_orb;
  double sigma0;
  double sigma_v;
  double v_bar;
  double tau;
  double beta;
  double tau_fill;
  double probe_width;
} RingsimPeakTrain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, empty after a successful call. The
 * pointer stays valid until the next call on the same thread.
 */
const char *ringsim_last_error(void);

/**
 * Library version, a static string.
 */
const char *ringsim_version(void);

/**
 * Parse scenario TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RingsimStatus ringsim_scenario_parse(const char *toml, struct RingsimScenario **out);

/**
 * # Safety
 * `s` must come from [`ringsim_scenario_parse`] or be null.
 */
void ringsim_scenario_free(struct RingsimScenario *s);

/**
 * Content hash of the scenario as a hex string.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum RingsimStatus ringsim_scenario_hash(const struct RingsimScenario *s, char **out);

/**
 * Field of the full apparatus at `position` (m) and time `t` (s), written
 * to `field` (T).
 *
 * # Safety
 * `s` must be a live scenario handle, `position` and `field` must point to
 * three doubles each.
 */
enum RingsimStatus ringsim_field(struct RingsimScenario *s,
                                 const double *position,
                                 double t,
                                 double *field);

/**
 * Trap characterization report as JSON.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum RingsimStatus ringsim_characterize_json(const struct RingsimScenario *s, char **out);

/**
 * Run the ensemble. Blocks until done.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum RingsimStatus ringsim_simulate(const struct RingsimScenario *s, struct RingsimResult **out);

/**
 * # Safety
 * `r` must come from [`ringsim_simulate`] or be null.
 */
void ringsim_result_free(struct RingsimResult *r);

/**
 * Run summary as JSON.
 *
 * # Safety
 * `r` must be a live result handle and `out` a valid pointer.
 */
enum RingsimStatus ringsim_result_summary_json(const struct RingsimResult *r, char **out);

/**
 * Copy the probe trace into caller buffers of `capacity` entries.
 * `len` always receives the trace length; a short buffer returns
 * `RINGSIM_STATUS_BUFFER_TOO_SMALL` without copying, so a first call with `capacity = 0`
 * sizes the buffers.
 *
 * # Safety
 * `r` must be a live result handle, `len` valid, and `delays` and `signal`
 * valid for `capacity` doubles when `capacity > 0`.
 */
enum RingsimStatus ringsim_result_trace(const struct RingsimResult *r,
                                        double *delays,
                                        double *signal,
                                        size_t capacity,
                                        size_t *len);

/**
 * Fit the peak-train model to the run's probe trace; report as JSON.
 *
 * # Safety
 * `s` and `r` must be live handles and `out` a valid pointer.
 */
enum RingsimStatus ringsim_result_fit_json(const struct RingsimScenario *s,
                                           const struct RingsimResult *r,
                                           char **out);

/**
 * # Safety
 * `p` must come from this library or be null.
 */
void ringsim_string_free(char *p);

/**
 * Characterize a straight guide of wire `separation` (m) carrying `current`
 * (A) for a cloud at `temperature` (K), with the default moment.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RingsimStatus ringsim_guide_trap(double separation,
                                      double current,
                                      double temperature,
                                      struct RingsimGuideTrap *out);

/**
 * Evaluate the peak-train model at `n` times.
 *
 * # Safety
 * `params` must be valid, `t` and `out` valid for `n` doubles.
 */
enum RingsimStatus ringsim_peak_train(const struct RingsimPeakTrain *params,
                                      const double *t,
                                      size_t n,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RINGSIM_H */
