#ifndef RECTEX_H
#define RECTEX_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RectexStatus {
  RECTEX_STATUS_OK = 0,
  RECTEX_STATUS_NULL_POINTER = 1,
  RECTEX_STATUS_INVALID_UTF8 = 2,
  RECTEX_STATUS_PARSE = 3,
  RECTEX_STATUS_INVALID_ARGUMENT = 4,
  RECTEX_STATUS_DIMENSION_MISMATCH = 5,
  RECTEX_STATUS_SIZE_GUARD = 6,
  RECTEX_STATUS_NOT_FACTORABLE = 7,
  RECTEX_STATUS_SOLVER = 8,
  RECTEX_STATUS_BUFFER_TOO_SMALL = 9,
  RECTEX_STATUS_FAILURE = 10,
  RECTEX_STATUS_PANIC = 11,
} RectexStatus;

typedef enum RectexForm {
  RECTEX_FORM_DNF = 0,
  RECTEX_FORM_CNF = 1,
} RectexForm;

/**
 * Opaque network handle.
 */
typedef struct RectexNetwork RectexNetwork;

typedef struct RectexConversionReport {
  size_t n1;
  size_t n2;
  size_t first_layer_units;
  size_t second_layer_units;
} RectexConversionReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *rectex_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void rectex_string_free(char *s);

/**
 * Parses a network JSON document (`kind` is `relu`, `threshold` or `general`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RectexStatus rectex_network_from_json(const char *json, struct RectexNetwork **out);

/**
 * # Safety
 * `net` must be a live handle; `out` must be writable. Free the result with [`rectex_string_free`].
 */
enum RectexStatus rectex_network_to_json(const struct RectexNetwork *net, char **out);

/**
 * # Safety
 * `net` must be null or a handle from this library, not used afterwards.
 */
void rectex_network_free(struct RectexNetwork *net);

/**
 * # Safety
 * `net` must be a live handle; `out` must be writable.
 */
enum RectexStatus rectex_network_dim(const struct RectexNetwork *net, size_t *out);

/**
 * Writes `+1` or `-1` to `out`.
 *
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum RectexStatus rectex_network_eval(const struct RectexNetwork *net,
                                      const double *x,
                                      size_t len,
                                      int8_t *out);

/**
 * Converts a rectifier network into a three-layer threshold network.
 *
 * `max_first_layer_units` of 0 selects the default guard.
 *
 * # Safety
 * `net` must be a live handle; `out` must be writable; `report` may be null.
 */
enum RectexStatus rectex_convert(const struct RectexNetwork *net,
                                 enum RectexForm form,
                                 size_t max_first_layer_units,
                                 bool force,
                                 struct RectexNetwork **out,
                                 struct RectexConversionReport *report);

/**
 * Rectifier network with two units per sign unit of a two-layer threshold network.
 *
 * # Safety
 * `net` must be a live handle; `out` must be writable.
 */
enum RectexStatus rectex_approximate(const struct RectexNetwork *net,
                                     double eps,
                                     struct RectexNetwork **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum RectexStatus rectex_region_count(uint64_t n, uint64_t d, uint64_t *out);

/**
 * Witness point for the subset bitmask `subset` of the first `n` coordinates.
 *
 * # Safety
 * `out` must point to `len >= d` writable doubles.
 */
enum RectexStatus rectex_theorem2_witness(size_t n,
                                          size_t d,
                                          uint64_t subset,
                                          double *out,
                                          size_t len);

/**
 * Recovers `U` (`rows x (n+1)`, column-major) from `V = U T` (`rows x 2^n`).
 *
 * # Safety
 * `v` must hold `rows * cols` doubles; `out` must hold `len` doubles.
 */
enum RectexStatus rectex_exact_factorize(const double *v,
                                         size_t rows,
                                         size_t cols,
                                         double *out,
                                         size_t len);

/**
 * Best `U` under the induced infinity norm of `(V - U T)^T`; the optimum goes to `objective`.
 *
 * # Safety
 * As [`rectex_exact_factorize`]; `objective` must be writable.
 */
enum RectexStatus rectex_min_infnorm_factor(const double *v,
                                            size_t rows,
                                            size_t cols,
                                            double *out,
                                            size_t len,
                                            double *objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECTEX_H */
