#ifndef NVDG_H
#define NVDG_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NvdgForm {
  NVDG_FORM_ELIMINATED = 0,
  NVDG_FORM_MIXED = 1,
} NvdgForm;

typedef enum NvdgPenalty {
  /**
   * `sigma / h` on every face.
   */
  NVDG_PENALTY_UNIFORM = 0,
  /**
   * `sigma * lambda_max(A) / h`, with `A` sampled on the face.
   */
  NVDG_PENALTY_COEFFICIENT = 1,
} NvdgPenalty;

typedef enum NvdgStatus {
  NVDG_STATUS_OK = 0,
  NVDG_STATUS_NULL_POINTER = 1,
  NVDG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The linear solver failed on some level; the report holds the levels
   * completed before it.
   */
  NVDG_STATUS_SOLVER_FAILED = 3,
  NVDG_STATUS_IO = 4,
  NVDG_STATUS_OUT_OF_RANGE = 5,
  NVDG_STATUS_PANIC = 6,
} NvdgStatus;

/**
 * Opaque convergence report.
 */
typedef struct NvdgReport NvdgReport;

/**
 * Study parameters. Obtain defaults from [`nvdg_config_default`].
 */
typedef struct NvdgConfig {
  int degree;
  int levels;
  /**
   * Cells per side of the coarsest mesh.
   */
  int base_n;
  double sigma;
  enum NvdgPenalty penalty;
  /**
   * +1 or -1.
   */
  double theta;
  enum NvdgForm form;
  double tol;
} NvdgConfig;

/**
 * One row of a convergence table. Missing rates are NaN.
 */
typedef struct NvdgLevel {
  size_t n_elements;
  size_t n_dofs;
  double l2_error;
  double l2_eoc;
  double energy_error;
  double energy_eoc;
  size_t iterations;
  double relative_residual;
} NvdgLevel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *nvdg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nvdg_version(void);

struct NvdgConfig nvdg_config_default(void);

/**
 * Runs a refinement study for `test` ("1", "2", "3a" or "3b").
 *
 * On `NVDG_STATUS_OK` or `NVDG_STATUS_SOLVER_FAILED` a report is written to
 * `*out`; otherwise `*out` is set to NULL.
 *
 * # Safety
 * `test` must be a valid NUL-terminated string, `cfg` may be NULL (defaults)
 * or point to a valid config, and `out` must be writable.
 */
enum NvdgStatus nvdg_run_study(const char *test,
                               const struct NvdgConfig *cfg,
                               struct NvdgReport **out);

/**
 * Number of completed levels; 0 for NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle from [`nvdg_run_study`].
 */
size_t nvdg_report_num_levels(const struct NvdgReport *report);

/**
 * 1 when every requested level completed, 0 otherwise.
 *
 * # Safety
 * `report` must be NULL or a live handle from [`nvdg_run_study`].
 */
int nvdg_report_is_complete(const struct NvdgReport *report);

/**
 * Copies row `index` into `*out`.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum NvdgStatus nvdg_report_level(const struct NvdgReport *report,
                                  size_t index,
                                  struct NvdgLevel *out);

/**
 * The report as CSV. Free the result with [`nvdg_string_free`]; NULL on error.
 *
 * # Safety
 * `report` must be NULL or a live handle from [`nvdg_run_study`].
 */
char *nvdg_report_csv(const struct NvdgReport *report);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void nvdg_report_free(struct NvdgReport *report);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void nvdg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NVDG_H */
