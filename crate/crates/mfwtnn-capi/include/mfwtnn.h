#ifndef MFWTNN_H
#define MFWTNN_H

/* Generated by cbindgen from the mfwtnn-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a C-interface call. `MFWTNN_OK` is zero; everything else is a
 * failure whose text is available via `mfwtnn_last_error`.
 */
typedef enum mfwtnn_status {
  MFWTNN_OK = 0,
  MFWTNN_NULL_ARGUMENT = 1,
  MFWTNN_INVALID_ARGUMENT = 2,
  MFWTNN_DIM_MISMATCH = 3,
  MFWTNN_SYMMETRY = 4,
  MFWTNN_NUMERIC = 5,
  MFWTNN_CONFIG = 6,
  MFWTNN_FORMAT = 7,
  MFWTNN_ALREADY_EXISTS = 8,
  MFWTNN_IO = 9,
  MFWTNN_BAD_UTF8 = 10,
  MFWTNN_PANIC = 11,
} mfwtnn_status;

/**
 * Opaque solver configuration.
 */
typedef struct mfwtnn_config mfwtnn_config;

/**
 * Opaque real third-order tensor.
 */
typedef struct mfwtnn_cube mfwtnn_cube;

/**
 * Opaque restoration outcome holding the three estimated components.
 */
typedef struct mfwtnn_result mfwtnn_result;

/**
 * The four quality scores, in the order the CLI prints them.
 */
typedef struct mfwtnn_metrics {
  double mpsnr;
  double mssim;
  double ergas;
  double msam;
} mfwtnn_metrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mfwtnn_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncating if
 * needed, always NUL-terminated when `cap > 0`) and returns the length of
 * the full message in bytes, excluding the NUL.
 *
 * # Safety
 * `buf` must be NULL or valid for writes of `cap` bytes.
 */
size_t mfwtnn_last_error(char *buf, size_t cap);

/**
 * Builds a cube from `values`, tube-major, length `n1 * n2 * n3`. A NULL
 * `values` gives an all-zero cube. Returns NULL on failure.
 *
 * # Safety
 * `values` must be NULL or valid for reads of `len` doubles.
 */
struct mfwtnn_cube *mfwtnn_cube_new(size_t n1,
                                    size_t n2,
                                    size_t n3,
                                    const double *values,
                                    size_t len);

/**
 * Reads a cube file. Returns NULL on failure.
 *
 * # Safety
 * `path` must be a NUL-terminated string valid for reads.
 */
struct mfwtnn_cube *mfwtnn_cube_load(const char *path);

/**
 * Writes a cube file (doubles, little endian). Refuses to replace an
 * existing file unless `force` is set.
 *
 * # Safety
 * `cube` must be a live handle from this library; `path` must be a
 * NUL-terminated string valid for reads.
 */
enum mfwtnn_status mfwtnn_cube_save(const struct mfwtnn_cube *cube, const char *path, bool force);

/**
 * Reports the cube's dimensions.
 *
 * # Safety
 * `cube` must be a live handle; `n1`, `n2`, `n3` must be valid for writes.
 */
enum mfwtnn_status mfwtnn_cube_dims(const struct mfwtnn_cube *cube,
                                    size_t *n1,
                                    size_t *n2,
                                    size_t *n3);

/**
 * Number of scalars in the cube.
 *
 * # Safety
 * `cube` must be NULL (returns 0) or a live handle.
 */
size_t mfwtnn_cube_len(const struct mfwtnn_cube *cube);

/**
 * Copies the cube's values into `out`, tube-major. `len` must equal
 * `mfwtnn_cube_len(cube)`.
 *
 * # Safety
 * `cube` must be a live handle; `out` must be valid for writes of `len`
 * doubles.
 */
enum mfwtnn_status mfwtnn_cube_copy_data(const struct mfwtnn_cube *cube, double *out, size_t len);

/**
 * Releases a cube handle. NULL is a no-op.
 *
 * # Safety
 * `cube` must be NULL or a handle from this library, not yet freed.
 */
void mfwtnn_cube_free(struct mfwtnn_cube *cube);

/**
 * Fresh configuration with the library defaults.
 */
struct mfwtnn_config *mfwtnn_config_new(void);

/**
 * Sets one configuration entry by key, with the same keys and value syntax
 * as the config file format (e.g. "model", "alpha", "lambda", "mu0").
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` must be NUL-terminated
 * strings valid for reads.
 */
enum mfwtnn_status mfwtnn_config_set(struct mfwtnn_config *config,
                                     const char *key,
                                     const char *value);

/**
 * Releases a configuration handle. NULL is a no-op.
 *
 * # Safety
 * `config` must be NULL or a handle from this library, not yet freed.
 */
void mfwtnn_config_free(struct mfwtnn_config *config);

/**
 * Corrupts a clean cube with one of the preset degradation cases (1..=8).
 * Returns NULL on failure.
 *
 * # Safety
 * `clean` must be a live handle.
 */
struct mfwtnn_cube *mfwtnn_simulate_case(const struct mfwtnn_cube *clean,
                                         uint8_t case_id,
                                         uint64_t seed);

/**
 * Runs the solver. A NULL `config` means defaults. Returns NULL on failure.
 *
 * # Safety
 * `noisy` must be a live cube handle; `config` must be NULL or a live
 * configuration handle.
 */
struct mfwtnn_result *mfwtnn_denoise(const struct mfwtnn_cube *noisy,
                                     const struct mfwtnn_config *config);

/**
 * Copy of the restored cube. The caller owns the returned handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
struct mfwtnn_cube *mfwtnn_result_x(const struct mfwtnn_result *result);

/**
 * Copy of the sparse component. The caller owns the returned handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
struct mfwtnn_cube *mfwtnn_result_s(const struct mfwtnn_result *result);

/**
 * Copy of the dense-noise component. The caller owns the returned handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
struct mfwtnn_cube *mfwtnn_result_n(const struct mfwtnn_result *result);

/**
 * Number of sweeps the solver ran. Zero when `result` is NULL.
 *
 * # Safety
 * `result` must be NULL or a live handle.
 */
size_t mfwtnn_result_iterations(const struct mfwtnn_result *result);

/**
 * Whether the solver met its tolerance before the iteration cap.
 *
 * # Safety
 * `result` must be NULL (returns false) or a live handle.
 */
bool mfwtnn_result_converged(const struct mfwtnn_result *result);

/**
 * Releases a result handle. NULL is a no-op.
 *
 * # Safety
 * `result` must be NULL or a handle from this library, not yet freed.
 */
void mfwtnn_result_free(struct mfwtnn_result *result);

/**
 * Scores `estimate` against `reference` and fills `out`.
 *
 * # Safety
 * `reference` and `estimate` must be live handles; `out` must be valid for
 * writes.
 */
enum mfwtnn_status mfwtnn_metrics_compute(const struct mfwtnn_cube *reference,
                                          const struct mfwtnn_cube *estimate,
                                          struct mfwtnn_metrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFWTNN_H */
