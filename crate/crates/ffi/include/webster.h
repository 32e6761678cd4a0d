/* C interface of the webster pseudohermitian calculus library. */

#ifndef WEBSTER_H
#define WEBSTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of every C-ABI call.
 */
typedef enum WbStatus {
  WB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  WB_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  WB_STATUS_INVALID_UTF8 = 2,
  /**
   * Expression or configuration text failed to parse.
   */
  WB_STATUS_PARSE = 3,
  /**
   * A calculus guard fired (|φ| ≥ 1, nonpositive factor, ...).
   */
  WB_STATUS_DOMAIN = 4,
  /**
   * The base tensor violates the gluing normalization.
   */
  WB_STATUS_NORMALIZATION = 5,
  /**
   * The quotient minimizer did not converge.
   */
  WB_STATUS_NONCONVERGENCE = 6,
  WB_STATUS_IO = 7,
  WB_STATUS_INTERNAL = 8,
} WbStatus;

/**
 * Opaque handle of a parsed scalar field.
 */
typedef struct WbField {
  uint8_t _private[0];
} WbField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *wb_last_error_message(void);

/**
 * Parses a field expression into an owned handle. On success `*out`
 * receives the handle, to be released with [`wb_field_free`].
 *
 * # Safety
 * `src` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum WbStatus wb_field_parse(const char *src, struct WbField **out);

/**
 * Releases a field handle. Null is ignored.
 *
 * # Safety
 * `field` must come from [`wb_field_parse`] and not be freed twice.
 */
void wb_field_free(struct WbField *field);

/**
 * Evaluates a field at a chart point.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_field_eval(const struct WbField *field,
                            double x,
                            double y,
                            double z,
                            double *out_re,
                            double *out_im);

/**
 * Tanaka-Webster scalar curvature `R^{φ,Θ}` at a point.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_scalar_curvature(const struct WbField *phi,
                                  double x,
                                  double y,
                                  double z,
                                  double *out);

/**
 * Curvature under the conformal contact form `w²Θ`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_conformal_curvature(const struct WbField *phi,
                                     const struct WbField *w,
                                     double x,
                                     double y,
                                     double z,
                                     double *out);

/**
 * Pseudohermitian torsion coefficient at a point (complex).
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_torsion(const struct WbField *phi,
                         double x,
                         double y,
                         double z,
                         double *out_re,
                         double *out_im);

/**
 * Sublaplacian `Δ_b u` of a real field at a point.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_sublaplacian(const struct WbField *phi,
                              const struct WbField *u,
                              double x,
                              double y,
                              double z,
                              double *out);

/**
 * Squared horizontal gradient norm of `u` under `(φ, w²Θ)`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_grad_norm_sq(const struct WbField *phi,
                              const struct WbField *w,
                              const struct WbField *u,
                              double x,
                              double y,
                              double z,
                              double *out);

/**
 * Runs all verification suites. `*out_passed` receives 1 when every
 * suite passed, 0 otherwise.
 *
 * # Safety
 * `out_passed` must be a valid pointer.
 */
enum WbStatus wb_verify(int32_t *out_passed);

/**
 * Runs the gluing convergence study for a JSON configuration (the same
 * schema as the CLI `--config` file) and returns the JSON report in
 * `*out_json`, to be released with [`wb_string_free`].
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_glue_study(const char *config_json, char **out_json);

/**
 * Runs the Yamabe comparison study; returns [`WbStatus::Nonconvergence`]
 * (with the report still written) when any optimizer row failed to
 * converge.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WbStatus wb_yamabe_study(const char *config_json, char **out_json);

/**
 * Releases a string returned by a study runner. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void wb_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* WEBSTER_H */
